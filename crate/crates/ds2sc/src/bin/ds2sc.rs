fn main() {
    std::process::exit(ds2sc::cli::dispatch(std::env::args_os()));
}
