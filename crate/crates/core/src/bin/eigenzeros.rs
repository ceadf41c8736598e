fn main() {
    std::process::exit(eigenzeros::cli::main_with_args(std::env::args_os()));
}
