fn main() {
    std::process::exit(income_panel::harness::cli::run(std::env::args_os()));
}
