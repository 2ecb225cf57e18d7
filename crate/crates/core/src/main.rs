fn main() {
    std::process::exit(spatree::cli::run(std::env::args_os()));
}
