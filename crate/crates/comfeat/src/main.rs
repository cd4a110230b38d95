fn main() {
    std::process::exit(comfeat::cli::run_cli(std::env::args_os()));
}
