fn main() {
    std::process::exit(fwm_pairs::cli::main_with_args(std::env::args_os()));
}
