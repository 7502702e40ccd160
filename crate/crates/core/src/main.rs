fn main() {
    std::process::exit(betawishart::cli::main_with_args(std::env::args_os()));
}
