fn main() {
    let root = degenchain::cli::output_root();
    std::process::exit(degenchain::cli::main_with(std::env::args_os(), &root));
}
