fn main() {
    std::process::exit(idseg::cli::main_with_args(std::env::args_os()));
}
