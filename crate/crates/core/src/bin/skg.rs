fn main() {
    std::process::exit(skg_core::cli::main_with_env());
}
