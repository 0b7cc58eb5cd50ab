fn main() -> std::process::ExitCode {
    cluecart::cli::main()
}
