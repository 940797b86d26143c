fn main() {
    macpower::cli::main()
}
