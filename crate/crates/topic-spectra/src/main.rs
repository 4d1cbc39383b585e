fn main() {
    let code = topic_spectra::cli::run(std::env::args().skip(1));
    std::process::exit(code);
}
