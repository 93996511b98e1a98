fn main() -> std::process::ExitCode {
    migcopula::cli::main()
}
