fn main() {
    std::process::exit(cometary::cli::run(std::env::args_os()));
}
