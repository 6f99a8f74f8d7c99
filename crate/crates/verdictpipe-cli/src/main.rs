fn main() {
    std::process::exit(verdictpipe_cli::run(std::env::args_os()));
}
