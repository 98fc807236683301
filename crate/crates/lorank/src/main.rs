fn main() {
    std::process::exit(lorank::cli::main_with(std::env::args_os()));
}
