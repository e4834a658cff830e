fn main() -> std::process::ExitCode {
    marun::cli::main()
}
