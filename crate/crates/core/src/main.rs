fn main() {
    std::process::exit(spinperm::cli::main_with_args(std::env::args_os()));
}
