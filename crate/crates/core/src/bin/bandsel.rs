fn main() {
    bandsel::cli::main();
}
