fn main() {
    std::process::exit(rollseg::cli::run());
}
