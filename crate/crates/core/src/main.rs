fn main() {
    std::process::exit(nwn_sentiment::cli::run_cli(std::env::args_os()));
}
