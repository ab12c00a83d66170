fn main() {
    std::process::exit(gcd_audit::cli::run_from_env());
}
