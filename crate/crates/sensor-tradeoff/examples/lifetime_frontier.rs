//! The attainable (lifetime, accuracy) region and its Pareto envelope.
//!
//! Each training fraction alpha traces a curve through (U, A) space as the
//! back-off rate varies; no single curve dominates. The envelope marks the
//! operating points no other (rate, alpha) pair beats on both axes at once,
//! and the alpha = 0 reference rows show the Bayes ceiling that infinite
//! training data would reach at each rate.

use sensor_tradeoff::tradeoff::{log_spaced, Scenario};

fn main() -> sensor_tradeoff::Result<()> {
    let scenario = Scenario::independent(8, 100.0, 1.0)?;
    let rates = log_spaced(0.01, 100.0, 40)?;
    let alphas = [0.1, 0.3, 0.5, 0.7, 0.9];
    let rows = scenario.frontier(&rates, &alphas)?;

    println!("8 conflict-free sensors, l = 100\n");
    println!("operating points on the envelope:");
    println!(
        "{:>6} {:>9} {:>10} {:>8} {:>8}",
        "alpha", "rate", "U", "A", "A_bayes"
    );
    for row in rows.iter().filter(|r| r.envelope) {
        println!(
            "{:>6.2} {:>9.4} {:>10.2} {:>8.4} {:>8.4}",
            row.alpha, row.rate, row.u, row.accuracy, row.bayes_accuracy
        );
    }

    // The extremes of the envelope tell the whole story: long life with
    // mediocre classification, or sharp classification over a short life.
    let envelope: Vec<_> = rows.iter().filter(|r| r.envelope).collect();
    let longest = envelope
        .iter()
        .max_by(|a, b| a.u.total_cmp(&b.u))
        .expect("non-empty envelope");
    let sharpest = envelope
        .iter()
        .max_by(|a, b| a.accuracy.total_cmp(&b.accuracy))
        .expect("non-empty envelope");
    println!(
        "\nlongest life   U = {:>8.1} at A = {:.4} (alpha = {}, rate = {:.3})",
        longest.u, longest.accuracy, longest.alpha, longest.rate
    );
    println!(
        "best accuracy  U = {:>8.1} at A = {:.4} (alpha = {}, rate = {:.3})",
        sharpest.u, sharpest.accuracy, sharpest.alpha, sharpest.rate
    );
    Ok(())
}
