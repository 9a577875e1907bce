fn main() {
    std::process::exit(clockqmc::cli::main_with_args(std::env::args_os()));
}
