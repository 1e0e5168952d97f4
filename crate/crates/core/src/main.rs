fn main() {
    std::process::exit(univtest::harness::cli::main_with_args(std::env::args_os()));
}
