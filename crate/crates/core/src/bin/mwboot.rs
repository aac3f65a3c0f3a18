fn main() {
    std::process::exit(multiway_bootstrap::cli::main());
}
