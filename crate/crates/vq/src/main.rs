fn main() {
    std::process::exit(vq::cli::run(std::env::args_os()));
}
