fn main() {
    std::process::exit(tubelab::cli::main_impl());
}
