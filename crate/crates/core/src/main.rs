fn main() {
    std::process::exit(fpk_lab::cli::run(std::env::args_os()));
}
