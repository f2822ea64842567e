fn main() {
    std::process::exit(expmoment_cli::run(std::env::args_os()));
}
