fn main() {
    let code = collision_reflex_cli::run(std::env::args_os());
    std::process::exit(code);
}
