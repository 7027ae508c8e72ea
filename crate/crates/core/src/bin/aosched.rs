fn main() {
    std::process::exit(aosched::cli::run(std::env::args_os()));
}
