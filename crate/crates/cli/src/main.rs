fn main() {
    std::process::exit(thermofrac_cli::main_with(std::env::args_os()));
}
