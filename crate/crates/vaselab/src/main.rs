fn main() {
    std::process::exit(vaselab::cli::run());
}
