use std::path::Path;
use std::process::{Command, Output};

use stochstab::cli::RunConfig;

const FIGURE: &str = "\
map.kind = logistic
map.r = 4
map.u = 0.125
control.regime = combined
control.sigma = 2.1
control.delta = 1e-6
control.beta = 0.015
control.z0 = 0.4
dwc.a = 1.25
dwc.alpha_coeff = 2.2
experiment.horizon = 200
";

fn stochstab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_stochstab")).args(args).env_remove("STOCHSTAB_SEED").output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

#[test]
fn lambda_reports_reference_value() {
    let o = stochstab(&["lambda", "--q", "1", "--sigma", "2.1"]);
    assert!(o.status.success());
    let text = stdout(&o);
    let row = text.lines().last().unwrap();
    let lambda: f64 = row.split(',').nth(2).unwrap().parse().unwrap();
    assert!((lambda - 0.44579906).abs() < 1e-8, "{text}");
    assert!(row.ends_with(",true"));
}

#[test]
fn lambda_monte_carlo_agrees() {
    let o = stochstab(&["lambda", "--noise", "uniform", "--q", "1", "--sigma", "2.5", "--mc", "200000", "--seed", "4"]);
    let text = stdout(&o);
    let row: Vec<f64> = text.lines().last().unwrap().split(',').filter_map(|s| s.parse().ok()).collect();
    let (exact, mc, se) = (row[2], row[6], row[7]);
    assert!((exact - mc).abs() < 4.0 * se, "{text}");
}

#[test]
fn simulate_is_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "fig.conf", FIGURE);
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    let svg_a = dir.path().join("a.svg");
    let svg_b = dir.path().join("b.svg");
    for (out, svg) in [(&a, &svg_a), (&b, &svg_b)] {
        let o = stochstab(&[
            "simulate",
            "-c",
            &cfg,
            "--seed",
            "11",
            "--out",
            out.to_str().unwrap(),
            "--emit-svg",
            svg.to_str().unwrap(),
        ]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let csv = std::fs::read(&a).unwrap();
    assert_eq!(csv, std::fs::read(&b).unwrap());
    assert_eq!(std::fs::read(&svg_a).unwrap(), std::fs::read(&svg_b).unwrap());
    let text = String::from_utf8(csv).unwrap();
    assert!(text.starts_with("# stochstab trajectory v1\n# master_seed = 11, trial = 0\n"));
    assert_eq!(text.lines().filter(|l| !l.starts_with('#')).count(), 1 + 201);
}

#[test]
fn seed_flag_overrides_environment_and_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "fig.conf", &format!("{FIGURE}experiment.seed = 5\n"));
    let run = |extra: &[&str], env: Option<&str>| {
        let mut c = Command::new(env!("CARGO_BIN_EXE_stochstab"));
        c.args(["simulate", "-c", &cfg, "--horizon", "5"]).args(extra);
        match env {
            Some(v) => c.env("STOCHSTAB_SEED", v),
            None => c.env_remove("STOCHSTAB_SEED"),
        };
        stdout(&c.output().unwrap())
    };
    assert!(run(&[], Some("9")).contains("master_seed = 5,"));
    assert!(run(&["--seed", "7"], Some("9")).contains("master_seed = 7,"));
    let bare = write(dir.path(), "bare.conf", FIGURE);
    let o = Command::new(env!("CARGO_BIN_EXE_stochstab"))
        .args(["simulate", "-c", &bare, "--horizon", "5"])
        .env("STOCHSTAB_SEED", "9")
        .output()
        .unwrap();
    assert!(stdout(&o).contains("master_seed = 9,"));
}

#[test]
fn config_round_trips_through_both_formats() {
    let c = RunConfig::parse(FIGURE).unwrap();
    assert_eq!(RunConfig::parse(&c.to_lines()).unwrap(), c);
    assert_eq!(RunConfig::parse(&c.to_json()).unwrap(), c);
    let dir = tempfile::tempdir().unwrap();
    let lines = write(dir.path(), "a.conf", &c.to_lines());
    let json = write(dir.path(), "a.json", &c.to_json());
    let a = stochstab(&["params", "-c", &lines]);
    let b = stochstab(&["params", "-c", &json]);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn params_json_lists_constants_and_relations() {
    let o = stochstab(&[
        "params",
        "--format",
        "json",
        "--set",
        "control.sigma=2.1",
        "--set",
        "map.r=4",
        "--set",
        "map.u=0.05",
        "--set",
        "control.regime=combined",
        "--set",
        "control.iota=0.5",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["constants"]["bar_s"], "10446835");
    assert!(v["relations"].as_array().unwrap().iter().all(|r| r["holds"] == true));
}

#[test]
fn infeasible_walk_exits_nonzero_naming_the_bound() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "bad.conf",
        "map.kind = custom\nmap.expr = 1 + 1.4*(z - 1) - 0.2*abs(z - 1)\nmap.k = 1\nmap.q = 0.4\nmap.c = 1\n\
         map.kappa = 1\nmap.u = 0.1\nmap.orientation = preserve\nmap.underline_l = 1.2\nmap.bar_q = 0.6\n\
         control.regime = dwc_then_mnc\ncontrol.sigma = 0\ncontrol.delta = 0.001\ndwc.a = 2.5\n",
    );
    let o = stochstab(&["params", "-c", &cfg]);
    assert!(!o.status.success());
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("underline_L/bar_q"), "{err}");
}

#[test]
fn config_errors_point_at_the_line() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "bad.conf", "map.r = 4\n\ncontrol.sigma = big\n");
    let o = stochstab(&["params", "-c", &cfg]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("line 3") && err.contains("control.sigma"), "{err}");
}

#[test]
fn verify_passes_and_fails() {
    let dir = tempfile::tempdir().unwrap();
    let good = write(dir.path(), "fig.conf", FIGURE);
    let o = stochstab(&["verify", "-c", &good]);
    assert!(o.status.success(), "{}", stdout(&o));
    assert!(stdout(&o).contains("combined:basin,true"));

    // beta too wide for the one-step basin bound
    let o = stochstab(&["verify", "-c", &good, "--set", "control.beta=0.1"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("combined:basin,false"));
}

#[test]
fn sweep_and_montecarlo_write_csv() {
    let o = stochstab(&["sweep", "--q", "1", "--sigma", "0.5,2.1,2"]);
    let text = stdout(&o);
    assert!(text.contains("1.0000000000000000e0,2.0000000000000000e0,singular,singular,true"), "{text}");

    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "fig.conf", FIGURE);
    let o = stochstab(&["montecarlo", "-c", &cfg, "--trials", "20", "--seed", "3", "--workers", "2"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    assert!(text.starts_with("# stochstab montecarlo v1\n"));
    assert!(text.contains("# trials = 20\n"));
    assert_eq!(text.lines().filter(|l| !l.starts_with('#')).count(), 21);
}
