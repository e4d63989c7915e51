fn main() {
    std::process::exit(irsem_cli::run(std::env::args().collect()));
}
