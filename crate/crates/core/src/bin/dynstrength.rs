fn main() {
    std::process::exit(dynstrength::cli::run(std::env::args_os()));
}
