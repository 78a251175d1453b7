fn main() {
    std::process::exit(ocdm_cli::run_cli(std::env::args_os()));
}
