fn main() {
    std::process::exit(hw11_cli::run(std::env::args_os()));
}
