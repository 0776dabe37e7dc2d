fn main() {
    std::process::exit(hazard_dispatch::cli::main_with_args(std::env::args_os()));
}
