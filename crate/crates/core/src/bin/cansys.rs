fn main() {
    std::process::exit(cansys::cli::main_with_args(std::env::args_os()));
}
