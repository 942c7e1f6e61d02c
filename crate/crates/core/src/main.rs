fn main() {
    std::process::exit(compound_secrecy::cli::main_with_args(std::env::args_os()));
}
