fn main() {
    std::process::exit(dser::cli::run(std::env::args_os()));
}
