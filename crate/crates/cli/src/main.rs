fn main() {
    std::process::exit(uplift_cli::run_main());
}
