fn main() {
    std::process::exit(wknn::cli::run());
}
