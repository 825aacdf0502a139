fn main() {
    env_logger::init();
    std::process::exit(transq::cli::run(std::env::args_os()));
}
