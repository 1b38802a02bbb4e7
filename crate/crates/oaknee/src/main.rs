fn main() {
    oaknee::cli::main();
}
