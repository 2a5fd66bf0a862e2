fn main() {
    std::process::exit(dichotomic_bell::cli::main_with_args(std::env::args_os()));
}
