fn main() {
    std::process::exit(ksq_cli::run(std::env::args_os()));
}
