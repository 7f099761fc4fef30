fn main() {
    std::process::exit(cubicnet::cli::run(std::env::args_os()));
}
