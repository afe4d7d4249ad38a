fn main() {
    std::process::exit(contraction_sos::cli::run(std::env::args_os()));
}
