fn main() {
    std::process::exit(redact_retry::cli::main());
}
