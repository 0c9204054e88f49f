fn main() {
    std::process::exit(bayrn_lab::cli::main(std::env::args_os()));
}
