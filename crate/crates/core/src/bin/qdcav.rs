fn main() {
    std::process::exit(qdcav::cli::run(std::env::args_os()));
}
