fn main() {
    std::process::exit(outline_eval::cli::run(std::env::args()));
}
