fn main() {
    std::process::exit(sbh_core::cli::main_with_args(std::env::args_os()));
}
