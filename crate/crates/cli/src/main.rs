fn main() {
    std::process::exit(brickjam_cli::main_with_args(std::env::args_os()));
}
