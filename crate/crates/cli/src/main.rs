fn main() {
    std::process::exit(compass_cli::cli::main_with(std::env::args_os()));
}
