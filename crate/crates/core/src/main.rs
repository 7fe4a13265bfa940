fn main() {
    std::process::exit(afgcl::cli::run(std::env::args_os()));
}
