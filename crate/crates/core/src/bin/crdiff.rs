fn main() {
    std::process::exit(cr_diffusion::cli::main_with_args(std::env::args_os()));
}
