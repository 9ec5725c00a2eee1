fn main() {
    std::process::exit(epsim::cli::main_with_args(std::env::args_os()));
}
