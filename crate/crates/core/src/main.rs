fn main() {
    std::process::exit(dqpt::cli::main_with_args(std::env::args_os()));
}
