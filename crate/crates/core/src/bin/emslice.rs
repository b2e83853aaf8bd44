fn main() {
    std::process::exit(emslice::cli::main_with(std::env::args_os()));
}
