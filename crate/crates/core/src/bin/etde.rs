fn main() {
    std::process::exit(etde::cli::cli_main(std::env::args_os()));
}
