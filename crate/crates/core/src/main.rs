fn main() {
    std::process::exit(latent_shift::cli::main_with_args(std::env::args_os()));
}
