fn main() {
    std::process::exit(nonlocal_liouville::cli::run_from(std::env::args_os()));
}
