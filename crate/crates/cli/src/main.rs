fn main() {
    std::process::exit(fri_cli::main_with_args(std::env::args_os()));
}
