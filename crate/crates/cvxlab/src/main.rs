fn main() {
    std::process::exit(cvxlab::run(std::env::args_os()));
}
