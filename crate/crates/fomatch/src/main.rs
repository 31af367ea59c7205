fn main() {
    std::process::exit(fomatch::cli::run(std::env::args_os()));
}
