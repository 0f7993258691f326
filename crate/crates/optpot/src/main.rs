fn main() {
    std::process::exit(optpot::cli::main(std::env::args_os()));
}
