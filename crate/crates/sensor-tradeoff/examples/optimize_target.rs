//! Lifetime maximization under an accuracy floor, and where it breaks.
//!
//! For a modest floor the optimum picks a slow rate and a small training
//! fraction, banking lifetime. Past a threshold floor the finite search
//! space can no longer deliver the accuracy, and the optimizer certifies
//! that only the infinite-rate limit (with its floor-bisected alpha) meets
//! the constraint: rate_star is reported as unbounded.

use sensor_tradeoff::tradeoff::{lin_spaced, log_spaced, RateStar, Scenario};

fn main() -> sensor_tradeoff::Result<()> {
    let scenario = Scenario::independent(8, 100.0, 1.0)?;
    let rates = log_spaced(0.01, 100.0, 120)?;
    let alphas = lin_spaced(0.01, 0.90, 60)?;

    println!("8 conflict-free sensors, l = 100\n");
    println!(
        "{:>6}  {:>10} {:>10} {:>10}  {}",
        "beta", "alpha*", "rate*", "U*", "status"
    );
    for beta in [0.60, 0.68, 0.74, 0.76, 0.84, 0.90, 0.93] {
        let report = scenario.optimize(beta, &alphas, &rates, 1e4)?;
        let (rate_cell, status) = match (&report.rate_star, report.feasible) {
            (Some(RateStar::Finite(rate)), _) => (format!("{rate:>10.4}"), "finite"),
            (Some(RateStar::Unbounded), _) => (format!("{:>10}", "inf"), "unbounded"),
            (None, _) => (format!("{:>10}", "-"), "infeasible"),
        };
        if report.feasible {
            println!(
                "{beta:>6.2}  {:>10.4} {rate_cell} {:>10.2}  {status}",
                report.alpha_star, report.u_star
            );
        } else {
            println!("{beta:>6.2}  {:>10} {rate_cell} {:>10}  {status}", "-", "-");
        }
    }

    // The infinite-rate limit explains the switch: every sensor transmits
    // whenever the channel allows, so accuracy depends on alpha alone and
    // lifetime is simply (1 - alpha) * l.
    println!("\ninfinite-rate limit at a few training fractions:");
    for alpha in [0.1, 0.2, 0.4] {
        let limit = scenario.limit_at_infinite_rate(alpha)?;
        println!(
            "  alpha = {alpha:.1}: U = {:>6.2}, A = {:.4}",
            limit.u, limit.accuracy
        );
    }
    Ok(())
}
