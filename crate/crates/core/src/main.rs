fn main() {
    if let Err(e) = lsqkd::cli::configure_threads() {
        eprintln!("error: {e}");
        std::process::exit(lsqkd::cli::EXIT_USAGE);
    }
    let code = lsqkd::cli::run(std::env::args_os(), &mut std::io::stdout(), &mut std::io::stderr());
    std::process::exit(code);
}
