fn main() {
    std::process::exit(nodemind::cli::run(std::env::args_os()));
}
