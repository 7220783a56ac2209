fn main() -> std::process::ExitCode {
    evomelody::cli::main()
}
