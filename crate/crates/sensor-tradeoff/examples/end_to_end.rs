//! One full train-then-operate replication against the analytic prediction.
//!
//! A replication simulates the activity chain until the first battery dies,
//! collects the training measurements each pattern actually received during
//! the training window, fits one linear rule per classifier class, and
//! scores the fitted rules exactly. Averaged over replications the realized
//! accuracy should approach the stationary-law prediction.

use sensor_tradeoff::simulate::end_to_end_sim;
use sensor_tradeoff::tradeoff::Scenario;

fn main() -> sensor_tradeoff::Result<()> {
    let scenario = Scenario::chain3(10.0, 1.0, 0.25)?;
    let point = scenario.evaluate(1.0, 0.4)?;
    let backoff = scenario.backoff_for(1.0)?;

    println!("chain of 3, eta = 1, l = 10, alpha = 0.4, seed 5\n");
    let outcome = end_to_end_sim(
        &point.analysis,
        scenario.conflict(),
        &backoff,
        scenario.model(),
        scenario.grouping(),
        5,
    )?;
    println!("{:<8} {:>10} {:>10}", "pattern", "expected m", "realized m");
    for (i, state) in point.analysis.states.iter().enumerate() {
        println!(
            "{:<8} {:>10.3} {:>10.0}",
            state.label(),
            point.analysis.samples[i],
            outcome.realized_samples[i]
        );
    }
    println!(
        "\nrealized accuracy {:.4} vs analytic {:.4}",
        outcome.total_accuracy, point.breakdown.total
    );
    println!(
        "realized operational lifetime {:.2} vs analytic {:.2}",
        outcome.operational_lifetime, point.u
    );

    let replications = 60u64;
    let mut sum = 0.0;
    for seed in 0..replications {
        let outcome = end_to_end_sim(
            &point.analysis,
            scenario.conflict(),
            &backoff,
            scenario.model(),
            scenario.grouping(),
            seed,
        )?;
        sum += outcome.total_accuracy;
    }
    println!(
        "\nmean over {replications} replications: {:.4} (analytic {:.4})",
        sum / replications as f64,
        point.breakdown.total
    );
    Ok(())
}
