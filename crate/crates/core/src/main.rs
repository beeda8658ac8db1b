fn main() {
    std::process::exit(golfstat::cli::main_with_args(std::env::args_os()));
}
