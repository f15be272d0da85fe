fn main() {
    std::process::exit(frontier_kpp_cli::run(std::env::args().collect()));
}
