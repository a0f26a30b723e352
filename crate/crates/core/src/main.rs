fn main() {
    std::process::exit(vbreg::cli::run(std::env::args_os()));
}
