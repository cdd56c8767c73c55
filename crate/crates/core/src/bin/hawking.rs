fn main() {
    std::process::exit(hawking_core::cli::run(std::env::args_os()));
}
