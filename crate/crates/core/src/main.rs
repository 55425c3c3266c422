fn main() {
    std::process::exit(degiorgi::cli::execute(std::env::args_os()));
}
