fn main() {
    std::process::exit(algebraic_changepoint::cli::dispatch(std::env::args_os()));
}
