fn main() {
    std::process::exit(zenoscope_cli::run(std::env::args_os()));
}
