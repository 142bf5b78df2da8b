fn main() {
    std::process::exit(chemo_harness::cli::main());
}
