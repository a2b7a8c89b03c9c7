fn main() {
    std::process::exit(ambipolicy::cli::main_with_args(std::env::args_os()));
}
