fn main() {
    std::process::exit(crowdmine::cli::main());
}
