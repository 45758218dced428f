fn main() {
    std::process::exit(minhom::cli::run(std::env::args_os()));
}
