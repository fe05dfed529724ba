//! Product-form stationary analysis: occupancy, throughput, lifetimes,
//! and expected training samples.
//!
//! Under exponential back-off the active set is a reversible chain whose
//! stationary weight for a pattern is the product of the back-off rates of
//! its active nodes. Everything downstream is a function of that law: node
//! throughput, battery lifetime (battery l drains one unit per active unit
//! of time), the training window alpha * min lifetime, and the expected
//! sample count each pattern accumulates inside it.

use sensor_tradeoff::csma::{
    chain3_rates, indep_closed_forms, mean_training_samples, BackoffConfig, CsmaAnalysis,
    EnergyBudget, LifetimePolicy,
};
use sensor_tradeoff::topology::{build_nn_graph, enumerate_states, SensorLayout};

fn main() -> sensor_tradeoff::Result<()> {
    // Three sensors in a chain, middle node twice as eager as the ends.
    let layout = SensorLayout::line(3)?;
    let conflict = build_nn_graph(&layout)?;
    let states = enumerate_states(&conflict)?;
    let backoff = BackoffConfig::new(chain3_rates(1.0).to_vec())?;
    let budget = EnergyBudget::new(10.0, 0.4)?;
    let analysis = CsmaAnalysis::compute(states, &backoff, &budget, LifetimePolicy::MinLifetime)?;

    println!("chain of 3, eta = 1, l = 10, alpha = 0.4");
    println!("{:<8} {:>8} {:>10}", "pattern", "pi", "samples");
    for (i, state) in analysis.states.iter().enumerate() {
        println!(
            "{:<8} {:>8.4} {:>10.4}",
            state.label(),
            analysis.pi[i],
            analysis.samples[i]
        );
    }
    println!("normalizer Z = {:.4}", analysis.z);
    println!("expected active sensors = {:.4}", analysis.expected_active());
    println!(
        "node throughput = [{:.4}, {:.4}, {:.4}]",
        analysis.throughput[0], analysis.throughput[1], analysis.throughput[2]
    );
    println!(
        "node lifetime   = [{:.1}, {:.1}, {:.1}]",
        analysis.lifetime[0], analysis.lifetime[1], analysis.lifetime[2]
    );
    println!("training window = {:.1}", analysis.training_lifetime);

    // Conflict-free networks admit closed forms; the general chain machinery
    // reproduces them exactly.
    println!("\nconflict-free n = 8 at nu = 1, l = 100, alpha = 0.2:");
    let closed = indep_closed_forms(8, 1.0, &EnergyBudget::new(100.0, 0.2)?)?;
    println!("  per-node throughput  {:.4}", closed.theta);
    println!("  node lifetime        {:.4}", closed.lifetime);
    println!("  operational lifetime {:.4}", closed.op_lifetime);
    let mean_samples = mean_training_samples(&closed.pi_class, &closed.m_class)?;
    println!("  mean training samples over patterns {:.4}", mean_samples);
    Ok(())
}
