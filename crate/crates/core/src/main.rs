fn main() {
    std::process::exit(ambiguity_auction::cli::main_with(std::env::args_os()));
}
