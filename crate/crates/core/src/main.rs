fn main() {
    std::process::exit(rtlinear::cli::main_with(std::env::args_os()));
}
