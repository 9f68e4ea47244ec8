fn main() {
    std::process::exit(finsler::cli::cli_main(std::env::args()));
}
