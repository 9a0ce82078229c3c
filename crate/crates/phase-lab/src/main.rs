fn main() {
    let code = phase_lab::cli::run(std::env::args_os());
    std::process::exit(code);
}
