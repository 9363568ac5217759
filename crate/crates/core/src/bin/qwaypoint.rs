fn main() {
    std::process::exit(qwaypoint::cli::run(std::env::args_os()));
}
