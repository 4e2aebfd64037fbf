fn main() {
    std::process::exit(opo_cli::run(std::env::args_os()));
}
