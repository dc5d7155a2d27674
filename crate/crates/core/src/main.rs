fn main() {
    std::process::exit(toric_lab::cli::run(std::env::args_os()));
}
