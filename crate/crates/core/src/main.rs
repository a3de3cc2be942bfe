fn main() {
    std::process::exit(chansound::cli::run(std::env::args_os()));
}
