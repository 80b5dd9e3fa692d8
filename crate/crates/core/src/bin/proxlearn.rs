fn main() {
    std::process::exit(proxlearn::cli::run_with_args(std::env::args_os()));
}
