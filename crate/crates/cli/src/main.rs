fn main() {
    std::process::exit(oam_forge::run(std::env::args_os().collect()));
}
