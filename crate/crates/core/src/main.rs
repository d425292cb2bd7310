fn main() {
    std::process::exit(macdlab::cli::run(std::env::args_os()));
}
