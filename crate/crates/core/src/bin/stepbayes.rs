fn main() -> std::process::ExitCode {
    stepbayes::cli::main()
}
