fn main() {
    std::process::exit(txguard_cli::run(std::env::args_os()));
}
