fn main() {
    println!("gmtlab CLI placeholder");
}
