fn main() {
    std::process::exit(sensor_tradeoff::cli::run());
}
