fn main() {
    std::process::exit(spatial_confounding::cli::main_with_args(std::env::args_os()));
}
