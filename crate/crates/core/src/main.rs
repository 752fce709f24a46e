fn main() {
    std::process::exit(affine_strand::cli::main_with_args(std::env::args_os()));
}
