fn main() {
    std::process::exit(toa_box::cli::main_with_args(std::env::args_os()));
}
