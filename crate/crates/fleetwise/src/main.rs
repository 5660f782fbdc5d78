fn main() {
    std::process::exit(fleetwise::cli::run(std::env::args_os()));
}
