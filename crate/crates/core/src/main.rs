fn main() {
    std::process::exit(needle_cd::cli::run(std::env::args_os()));
}
