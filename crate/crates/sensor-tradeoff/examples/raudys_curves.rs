//! Finite-sample classification accuracy and the cost of scarce training.
//!
//! A linear rule trained on m labeled measurements of an n_active-sensor
//! pattern reaches only a fraction of the Bayes accuracy Phi(delta/2). The
//! expected-generalization approximation used here is exactly 1/2 until m
//! exceeds the dimension, climbs steeply just past it, and approaches the
//! Bayes ceiling as m grows.

use sensor_tradeoff::accuracy::{bayes_accuracy, raudys_accuracy};

fn main() -> sensor_tradeoff::Result<()> {
    let delta_sq = 4.0;
    println!("delta^2 = 4, Bayes ceiling = {:.4}\n", bayes_accuracy(delta_sq)?);

    println!("{:>4}  {:>10} {:>10} {:>10}", "m", "n=2", "n=4", "n=8");
    for m in [1u32, 2, 4, 5, 8, 9, 12, 16, 24, 48, 96, 400] {
        let row: Vec<String> = [2usize, 4, 8]
            .iter()
            .map(|&n| {
                raudys_accuracy(delta_sq, n, f64::from(m))
                    .map(|a| format!("{a:>10.4}"))
                    .unwrap_or_else(|_| format!("{:>10}", "-"))
            })
            .collect();
        println!("{m:>4}  {}", row.join(" "));
    }

    // Just past m = n the climb behaves like sqrt(m - n): the first few
    // samples beyond the dimension barely beat coin flipping.
    println!("\naccuracy just past the m = n threshold (n = 8):");
    for m in [8.0, 8.5, 9.0, 10.0, 12.0] {
        println!("  m = {m:>4.1}  A = {:.4}", raudys_accuracy(delta_sq, 8, m)?);
    }

    // With delta^2 fixed, more active sensors means more parameters to fit
    // from the same samples, and accuracy drops even though the signal is
    // unchanged.
    println!("\nfixed m = 24, growing dimension:");
    for n in [1usize, 2, 4, 8, 16, 23] {
        println!(
            "  n = {n:>2}  A = {:.4}",
            raudys_accuracy(delta_sq, n, 24.0)?
        );
    }
    Ok(())
}
