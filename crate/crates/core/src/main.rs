fn main() {
    std::process::exit(elemtrip::cli::main_with(std::env::args_os()));
}
