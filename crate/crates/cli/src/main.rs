fn main() {
    std::process::exit(hh_cli::parse_and_dispatch(std::env::args_os()));
}
