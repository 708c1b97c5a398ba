fn main() {
    println!("subplan: CLI wiring pending");
}
