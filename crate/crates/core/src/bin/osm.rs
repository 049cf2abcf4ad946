fn main() {
    std::process::exit(osm_core::cli::run(std::env::args_os()));
}
