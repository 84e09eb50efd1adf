fn main() {
    std::process::exit(ncss::cli::run(std::env::args_os()));
}
