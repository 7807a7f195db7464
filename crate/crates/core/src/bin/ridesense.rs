fn main() -> std::process::ExitCode {
    ridesense::cli::main_with_args(std::env::args_os())
}
