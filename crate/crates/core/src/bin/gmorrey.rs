fn main() {
    std::process::exit(grand_morrey::cli::run(std::env::args_os()));
}
