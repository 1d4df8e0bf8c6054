fn main() {
    std::process::exit(complete_records::cli::main_with_args(std::env::args_os()));
}
