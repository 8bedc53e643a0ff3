fn main() {
    std::process::exit(nhdyn_cli::main_with(std::env::args_os()));
}
