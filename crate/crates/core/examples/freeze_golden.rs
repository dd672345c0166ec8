//! Writes the frozen People's packing component used by the component tests.
use apollonian::components::{extract_component, Seed};
use apollonian::Quadruple;

fn main() {
    let s = extract_component(&Quadruple([-6, 11, 14, 15]), Seed::Curvature(11), 10_000, 1 << 20).expect("extract");
    println!("{}", s.to_json());
}
