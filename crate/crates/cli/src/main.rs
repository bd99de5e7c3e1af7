fn main() {
    std::process::exit(dlimit_cli::run(std::env::args_os()));
}
