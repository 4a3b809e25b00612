fn main() {
    std::process::exit(iontomo::cli::run(std::env::args_os()));
}
