fn main() {
    let code = loglimit_cli::commands::main_with(std::env::args(), &mut std::io::stdout(), &mut std::io::stderr());
    std::process::exit(code);
}
