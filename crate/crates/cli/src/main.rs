fn main() {
    std::process::exit(lerchlab_cli::run(std::env::args_os()));
}
