fn main() {
    env_logger::init();
    let code = sdwave::cli_io::run_cli(std::env::args_os(), &mut std::io::stdout(), &mut std::io::stderr());
    std::process::exit(code);
}
