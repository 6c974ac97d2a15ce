fn main() { std::process::exit(lexistab_cli::run(std::env::args_os())); }
