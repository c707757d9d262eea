fn main() {
    std::process::exit(smd_cli::main_with_args(std::env::args_os()));
}
