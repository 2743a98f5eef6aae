fn main() {
    std::process::exit(kronred_cli::run(std::env::args_os()));
}
