fn main() {
    std::process::exit(convex_ifs::cli::run(std::env::args_os()));
}
