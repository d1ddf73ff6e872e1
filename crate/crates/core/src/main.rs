fn main() -> std::process::ExitCode {
    stochstab::cli::main()
}
