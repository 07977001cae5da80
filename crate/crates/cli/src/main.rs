fn main() {
    std::process::exit(corm_cli::run(std::env::args_os()));
}
