fn main() {
    std::process::exit(densrec::cli::run(std::env::args_os()));
}
