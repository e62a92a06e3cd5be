fn main() {
    std::process::exit(aniso_core::cli::main_with_args(std::env::args_os()));
}
