fn main() {
    std::process::exit(symaccel::cli::main());
}
