fn main() {
    std::process::exit(fqdyn_cli::run(std::env::args_os()));
}
