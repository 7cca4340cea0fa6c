fn main() {
    std::process::exit(molflow_server::cli::run(std::env::args_os()));
}
