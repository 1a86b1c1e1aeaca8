fn main() {
    std::process::exit(ordnorm::cli::run(std::env::args_os()));
}
