//! The two-location gadget: the exact fair cost of the final window reveals
//! the bit at the queried index.

use fairwin::assignment::fair_cost;
use fairwin::harness::{augindex_spec, augindex_window, gen_augindex_instance, parse_bits};
use fairwin::point::{Center, WeightedPointSet};

fn main() -> fairwin::Result<()> {
    let (n, delta) = (4, 1000);
    let x = parse_bits("01101001")?;
    let centers = vec![Center(vec![0.0]), Center(vec![delta as f64])];
    for i in 1..=2 * n {
        let stream = gen_augindex_instance(n, i, &x, delta)?;
        let window: WeightedPointSet = stream[stream.len() - augindex_window(n)..].iter().cloned().collect();
        let cost = fair_cost(&window, &centers, &augindex_spec(), 1)?.cost();
        println!("i={i} x_i={} cost={:?}", u8::from(x[i - 1]), cost);
    }
    Ok(())
}
