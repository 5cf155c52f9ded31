fn main() {
    std::process::exit(morpho::cli::main_with_args(std::env::args_os()));
}
