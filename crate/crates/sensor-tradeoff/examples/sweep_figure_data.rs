//! Back-off rate sweep: lifetime falls, activity rises, accuracy wobbles.
//!
//! Raising the common back-off rate makes sensors transmit more, which
//! drains batteries faster (operational lifetime falls monotonically) and
//! reallocates training samples toward busier patterns. Accuracy is not
//! monotone: it climbs while the busy patterns gather their first useful
//! samples, dips when the training window has shrunk enough to starve them,
//! and recovers once near-saturated patterns dominate the stationary law.

use sensor_tradeoff::tradeoff::{log_spaced, Scenario};

fn main() -> sensor_tradeoff::Result<()> {
    let scenario = Scenario::independent(8, 100.0, 1.0)?;
    let rates = log_spaced(0.01, 100.0, 17)?;
    let table = scenario.sweep(&rates, 0.2)?;

    println!("8 conflict-free sensors, l = 100, alpha = 0.2\n");
    println!(
        "{:>9} {:>10} {:>7} {:>8} {:>8} {:>8}",
        "rate", "U", "k_bar", "m_bar", "A", "A_bayes"
    );
    for row in &table.rows {
        println!(
            "{:>9.4} {:>10.2} {:>7.3} {:>8.3} {:>8.4} {:>8.4}",
            row.rate, row.u, row.k_bar, row.m_bar, row.accuracy, row.bayes_accuracy
        );
    }

    let best = table
        .rows
        .iter()
        .max_by(|a, b| a.accuracy.total_cmp(&b.accuracy))
        .expect("non-empty sweep");
    println!(
        "\nbest accuracy {:.4} at rate {:.4}, paying U = {:.1}",
        best.accuracy, best.rate, best.u
    );
    let longest = table.rows.first().expect("non-empty sweep");
    println!(
        "slowest rate {:.4} keeps U = {:.1} at accuracy {:.4}",
        longest.rate, longest.u, longest.accuracy
    );
    Ok(())
}
