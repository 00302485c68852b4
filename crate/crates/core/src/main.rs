fn main() {
    std::process::exit(cavity_qsl::cli::main_with_args(std::env::args_os()));
}
