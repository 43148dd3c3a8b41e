fn main() {
    std::process::exit(cascade_core::cli::main_with_args(std::env::args_os()));
}
