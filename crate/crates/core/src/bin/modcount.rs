fn main() {
    std::process::exit(modcount::cli::main_with_args(std::env::args_os()));
}
