fn main() {
    std::process::exit(wassdiff_cli::main_with_args(std::env::args_os()));
}
