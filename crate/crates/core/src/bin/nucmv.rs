fn main() {
    std::process::exit(nucmv::cli::main_with(std::env::args_os()));
}
