fn main() {
    std::process::exit(weqsat::driver::run_cli(std::env::args()));
}
