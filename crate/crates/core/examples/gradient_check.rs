//! Backpropagated gradients against central finite differences.
//!
//! cargo run --release --example gradient_check

use afgcl::checks::gradient_errors;

fn main() -> afgcl::Result<()> {
    for seed in 0..5 {
        let errors = gradient_errors(seed)?;
        let worst = errors.iter().map(|(_, e)| *e).fold(0.0, f64::max);
        println!("seed {seed}: worst block relative error {worst:.3e}");
        for (name, e) in errors {
            println!("  {name:<16} {e:.3e}");
        }
    }
    Ok(())
}
