fn main() {
    std::process::exit(mfl::cli::main_with_args(std::env::args_os()));
}
