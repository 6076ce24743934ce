fn main() {
    std::process::exit(binpack::cli::run(std::env::args_os()));
}
