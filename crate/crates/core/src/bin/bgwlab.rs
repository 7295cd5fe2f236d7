fn main() {
    std::process::exit(bgwlab::cli::main_with_args(std::env::args_os()));
}
