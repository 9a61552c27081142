fn main() {
    std::process::exit(postsel::cli::run(std::env::args_os()));
}
