fn main() {
    std::process::exit(sgmask::cli::run(std::env::args_os()));
}
