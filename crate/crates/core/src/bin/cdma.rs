fn main() {
    std::process::exit(cdma::cli::main_with_args(std::env::args_os()));
}
