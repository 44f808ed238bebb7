fn main() {
    std::process::exit(swarmsgd_cli::run(std::env::args_os()));
}
