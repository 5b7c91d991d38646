fn main() {
    std::process::exit(obslab::harness::cli(std::env::args().collect()));
}
