fn main() {
    std::process::exit(prefmgda::cli::main());
}
