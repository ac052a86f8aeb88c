fn main() {
    std::process::exit(fraclag_cli::run(std::env::args_os()));
}
