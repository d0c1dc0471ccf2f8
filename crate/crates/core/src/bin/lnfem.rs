fn main() {
    std::process::exit(langevin_fem::cli::run(std::env::args_os()));
}
