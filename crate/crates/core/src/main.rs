fn main() { std::process::exit(invlab::cli::main_exit_code()); }
