fn main() {
    std::process::exit(coarse_quant::cli::main_with_args(std::env::args_os()));
}
