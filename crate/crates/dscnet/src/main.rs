fn main() {
    std::process::exit(dscnet::app::main());
}
