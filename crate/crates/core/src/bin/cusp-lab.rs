fn main() {
    std::process::exit(cusp_lab::cli::main(std::env::args_os()));
}
