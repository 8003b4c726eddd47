fn main() -> std::process::ExitCode {
    indagg::cli::main()
}
