fn main() {
    std::process::exit(sdnn::cli::run(std::env::args_os()));
}
