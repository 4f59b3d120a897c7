fn main() {
    std::process::exit(evoport::cli::main_with(std::env::args_os()));
}
