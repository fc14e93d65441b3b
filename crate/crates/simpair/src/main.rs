fn main() -> std::process::ExitCode {
    simpair::cli::main()
}
