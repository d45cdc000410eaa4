fn main() {
    std::process::exit(phonon_lab::cli::run());
}
