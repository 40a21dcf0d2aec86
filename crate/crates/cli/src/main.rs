fn main() {
    println!("iftem");
}
