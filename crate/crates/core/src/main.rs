fn main() {
    std::process::exit(optinet::cli::run(std::env::args_os()));
}
