fn main() {
    std::process::exit(memeaffect::cli::run(std::env::args_os()));
}
