fn main() {
    std::process::exit(tamealt::cli::dispatch(std::env::args_os()));
}
