//! Monte Carlo counterparts of the stationary and accuracy analyses.
//!
//! Three layers of simulation back the closed-form results: trajectory
//! simulation of the activity chain (occupancy fractions against the
//! stationary law), sample-trained Fisher discriminants (generalization
//! accuracy against the small-sample formula), and an end-to-end run that
//! trains classifiers on the samples a finite-battery network actually
//! collects, then measures what operational lifetime remains.
//!
//! Every run is driven by a counter-based generator seeded from a `u64`, so
//! results are bit-reproducible for a given seed and independent across
//! stream indices.

use std::collections::HashMap;
use std::io::Write;

use nalgebra::{Cholesky, DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Exp1, StandardNormal};

use crate::csma::{BackoffConfig, CsmaAnalysis, SampleGrouping};
use crate::gmrf::MeasurementModel;
use crate::topology::{ActivityState, Graph};
use crate::{Error, Result};

/// Defensive cap on transitions per end-to-end run.
const MAX_RUN_EVENTS: u64 = 50_000_000;

/// Deterministic generator for `(seed, stream)`: distinct streams of the
/// same seed are independent.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Half the L1 distance between two distributions on the same support.
pub fn total_variation(p: &[f64], q: &[f64]) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::Contract(format!(
            "distributions over {} and {} points",
            p.len(),
            q.len()
        )));
    }
    Ok(0.5 * p.iter().zip(q).map(|(&a, &b)| (a - b).abs()).sum::<f64>())
}

// ============================================================================
// Activity-chain trajectories
// ============================================================================

/// When to stop a trajectory.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Horizon {
    /// Stop after this many transitions.
    Events(u64),
    /// Stop at this elapsed time, clipping the final sojourn.
    Time(f64),
}

/// Time-averaged occupancy of a trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct Occupancy {
    /// Fraction of elapsed time each node was transmitting.
    pub node_fraction: Vec<f64>,
    /// Fraction of elapsed time in each pattern, aligned with the input
    /// pattern list.
    pub state_fraction: Vec<f64>,
    pub elapsed: f64,
    pub events: u64,
}

struct ChainSetup {
    n: usize,
    adjacency: Vec<u32>,
    index_of_mask: HashMap<u32, usize>,
}

fn chain_setup(
    states: &[ActivityState],
    conflict: &Graph,
    backoff: &BackoffConfig,
) -> Result<ChainSetup> {
    let first = states
        .first()
        .ok_or_else(|| Error::Contract("empty pattern list".into()))?;
    let n = first.len();
    if states.iter().any(|s| s.len() != n) {
        return Err(Error::Contract(
            "patterns are defined over differing node counts".into(),
        ));
    }
    if conflict.node_count() != n || backoff.len() != n {
        return Err(Error::Contract(format!(
            "pattern width {n}, conflict graph over {} nodes, {} back-off rates",
            conflict.node_count(),
            backoff.len()
        )));
    }
    let index_of_mask: HashMap<u32, usize> =
        states.iter().enumerate().map(|(i, s)| (s.mask(), i)).collect();
    if !index_of_mask.contains_key(&0) {
        return Err(Error::Contract(
            "pattern list must contain the all-inactive pattern".into(),
        ));
    }
    Ok(ChainSetup {
        n,
        adjacency: conflict.adjacency_masks()?,
        index_of_mask,
    })
}

/// Sum of outgoing rates from `mask`; `alive` masks out drained nodes.
fn total_rate(mask: u32, setup: &ChainSetup, rates: &[f64], alive: u32) -> f64 {
    let mut total = 0.0;
    for i in 0..setup.n {
        let bit = 1u32 << i;
        if mask & bit != 0 {
            total += 1.0;
        } else if alive & bit != 0 && setup.adjacency[i] & mask == 0 {
            total += rates[i];
        }
    }
    total
}

/// Picks the transition at cumulative-rate coordinate `target`; returns the
/// node and whether it activates.
fn pick_transition(
    mask: u32,
    setup: &ChainSetup,
    rates: &[f64],
    alive: u32,
    target: f64,
) -> (usize, bool) {
    let mut acc = 0.0;
    let mut last = (0usize, false);
    for i in 0..setup.n {
        let bit = 1u32 << i;
        let rate = if mask & bit != 0 {
            last = (i, false);
            1.0
        } else if alive & bit != 0 && setup.adjacency[i] & mask == 0 {
            last = (i, true);
            rates[i]
        } else {
            continue;
        };
        acc += rate;
        if target < acc {
            return last;
        }
    }
    // Round-off pushed the target past the final slot.
    last
}

/// Simulates the activity chain from the all-inactive pattern and returns
/// occupancy fractions.
pub fn simulate_ctmc(
    states: &[ActivityState],
    conflict: &Graph,
    backoff: &BackoffConfig,
    horizon: Horizon,
    seed: u64,
) -> Result<Occupancy> {
    run_ctmc(states, conflict, backoff, horizon, seed, None)
}

/// As [`simulate_ctmc`], additionally writing one `time,event,node,pattern`
/// row per transition. Times are transition instants, nodes are 1-based, and
/// the pattern column is the post-transition bit string.
pub fn simulate_ctmc_traced(
    states: &[ActivityState],
    conflict: &Graph,
    backoff: &BackoffConfig,
    horizon: Horizon,
    seed: u64,
    trace: &mut dyn Write,
) -> Result<Occupancy> {
    run_ctmc(states, conflict, backoff, horizon, seed, Some(trace))
}

fn run_ctmc(
    states: &[ActivityState],
    conflict: &Graph,
    backoff: &BackoffConfig,
    horizon: Horizon,
    seed: u64,
    mut trace: Option<&mut dyn Write>,
) -> Result<Occupancy> {
    let setup = chain_setup(states, conflict, backoff)?;
    if let Horizon::Time(t) = horizon {
        if !(t > 0.0 && t.is_finite()) {
            return Err(Error::Contract(format!(
                "time horizon {t} must be positive and finite"
            )));
        }
    }
    let rates = backoff.rates();
    let alive = if setup.n == 32 {
        u32::MAX
    } else {
        (1u32 << setup.n) - 1
    };
    let mut rng = stream_rng(seed, 0);
    let mut mask = 0u32;
    let mut node_time = vec![0.0; setup.n];
    let mut state_time = vec![0.0; states.len()];
    let mut elapsed = 0.0;
    let mut events = 0u64;

    loop {
        if let Horizon::Events(max) = horizon {
            if events >= max {
                break;
            }
        }
        let total = total_rate(mask, &setup, rates, alive);
        let exp: f64 = rng.sample(Exp1);
        let mut dt = exp / total;
        let state_idx = *setup.index_of_mask.get(&mask).ok_or_else(|| {
            Error::Contract(format!(
                "trajectory reached a pattern missing from the list: {mask:b}"
            ))
        })?;
        let mut clipped = false;
        if let Horizon::Time(t_end) = horizon {
            if elapsed + dt >= t_end {
                dt = t_end - elapsed;
                clipped = true;
            }
        }
        for i in 0..setup.n {
            if mask & (1 << i) != 0 {
                node_time[i] += dt;
            }
        }
        state_time[state_idx] += dt;
        elapsed += dt;
        if clipped {
            break;
        }
        let target = rng.random::<f64>() * total;
        let (node, activates) = pick_transition(mask, &setup, rates, alive, target);
        if activates {
            mask |= 1 << node;
        } else {
            mask &= !(1 << node);
        }
        events += 1;
        if let Some(w) = trace.as_deref_mut() {
            let bits: String = (0..setup.n)
                .map(|i| if mask & (1 << i) != 0 { '1' } else { '0' })
                .collect();
            let kind = if activates { "activate" } else { "deactivate" };
            writeln!(w, "{elapsed},{kind},{},{bits}", node + 1).map_err(Error::Io)?;
        }
    }

    Ok(Occupancy {
        node_fraction: node_time.iter().map(|&t| t / elapsed).collect(),
        state_fraction: state_time.iter().map(|&t| t / elapsed).collect(),
        elapsed,
        events,
    })
}

// ============================================================================
// Sample-trained classifiers
// ============================================================================

/// Labelled measurement vectors over one pattern's active sensors.
#[derive(Debug, Clone, Default)]
pub struct LabeledSamples {
    pub values: Vec<DVector<f64>>,
    /// `true` marks the shifted (event) class.
    pub labels: Vec<bool>,
}

impl LabeledSamples {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    fn push(&mut self, value: DVector<f64>, label: bool) {
        self.values.push(value);
        self.labels.push(label);
    }
}

fn restricted_mean(full: &DVector<f64>, nodes: &[usize]) -> DVector<f64> {
    DVector::from_iterator(nodes.len(), nodes.iter().map(|&i| full[i]))
}

fn covariance_factor(model: &MeasurementModel, state: &ActivityState) -> Result<Cholesky<f64, nalgebra::Dyn>> {
    let sigma = model.marginal_covariance(state)?;
    Cholesky::new(sigma).ok_or_else(|| {
        Error::Model(format!(
            "marginal covariance of pattern {} is not positive definite",
            state.label()
        ))
    })
}

/// Draws labelled measurements for one pattern: labels are fair coin flips
/// and values follow the pattern's marginal Gaussian for the drawn class.
pub fn sample_measurements<R: Rng>(
    model: &MeasurementModel,
    state: &ActivityState,
    count: usize,
    rng: &mut R,
) -> Result<LabeledSamples> {
    if state.len() != model.len() {
        return Err(Error::Contract(format!(
            "pattern over {} nodes against a model over {}",
            state.len(),
            model.len()
        )));
    }
    let nodes = state.active_nodes();
    let d = nodes.len();
    let chol = covariance_factor(model, state)?;
    let l = chol.l();
    let mu0 = restricted_mean(model.mu0(), &nodes);
    let mu1 = restricted_mean(model.mu1(), &nodes);
    let mut out = LabeledSamples::default();
    for _ in 0..count {
        let label = rng.random::<bool>();
        let z = DVector::from_fn(d, |_, _| rng.sample(StandardNormal));
        let mean = if label { &mu1 } else { &mu0 };
        out.push(mean + &l * z, label);
    }
    Ok(out)
}

/// Why Fisher training produced no usable classifier. Expected on sparse
/// training sets; the affected pattern is scored at chance rather than
/// treated as an error.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrainFailure {
    /// All samples carry one label.
    MissingClass,
    /// The pooled within-class scatter is not invertible.
    SingularScatter,
}

impl std::fmt::Display for TrainFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            TrainFailure::MissingClass => write!(f, "training set lacks a class"),
            TrainFailure::SingularScatter => {
                write!(f, "pooled within-class scatter is singular")
            }
        }
    }
}

/// Linear decision rule `w . x + offset > 0` for the shifted class.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainedClassifier {
    pub weights: DVector<f64>,
    pub offset: f64,
}

/// Fisher discriminant from labelled samples: weights solve the pooled
/// within-class scatter against the mean difference, and the offset centers
/// the rule between the class means.
pub fn train_fda(samples: &LabeledSamples) -> std::result::Result<TrainedClassifier, TrainFailure> {
    let m = samples.len();
    let m1 = samples.labels.iter().filter(|&&b| b).count();
    let m0 = m - m1;
    if m0 == 0 || m1 == 0 {
        return Err(TrainFailure::MissingClass);
    }
    let d = samples.values[0].len();
    if d == 0 {
        return Ok(TrainedClassifier {
            weights: DVector::zeros(0),
            offset: 0.0,
        });
    }
    let mut mean0 = DVector::zeros(d);
    let mut mean1 = DVector::zeros(d);
    for (x, &label) in samples.values.iter().zip(&samples.labels) {
        if label {
            mean1 += x;
        } else {
            mean0 += x;
        }
    }
    mean0 /= m0 as f64;
    mean1 /= m1 as f64;
    let mut scatter = DMatrix::zeros(d, d);
    for (x, &label) in samples.values.iter().zip(&samples.labels) {
        let centered = if label { x - &mean1 } else { x - &mean0 };
        scatter += &centered * centered.transpose() / if label { m1 as f64 } else { m0 as f64 };
    }
    let chol = Cholesky::new(scatter).ok_or(TrainFailure::SingularScatter)?;
    let weights = chol.solve(&(&mean1 - &mean0));
    let offset = -0.5 * weights.dot(&(&mean0 + &mean1));
    Ok(TrainedClassifier { weights, offset })
}

/// Exact accuracy of a fixed linear rule on fresh measurements from the
/// pattern's true Gaussians, labels equally likely. Degenerate rules (zero
/// or non-finite projected spread) score chance.
pub fn conditional_accuracy(
    classifier: &TrainedClassifier,
    model: &MeasurementModel,
    state: &ActivityState,
) -> Result<f64> {
    let nodes = state.active_nodes();
    if classifier.weights.len() != nodes.len() {
        return Err(Error::Contract(format!(
            "{}-dimensional rule for a pattern with {} active sensors",
            classifier.weights.len(),
            nodes.len()
        )));
    }
    if nodes.is_empty() {
        return Ok(0.5);
    }
    let sigma = model.marginal_covariance(state)?;
    let w = &classifier.weights;
    let spread_sq = (sigma * w).dot(w);
    if !(spread_sq > 0.0 && spread_sq.is_finite()) {
        return Ok(0.5);
    }
    let spread = spread_sq.sqrt();
    let mu0 = restricted_mean(model.mu0(), &nodes);
    let mu1 = restricted_mean(model.mu1(), &nodes);
    let margin1 = (w.dot(&mu1) + classifier.offset) / spread;
    let margin0 = (w.dot(&mu0) + classifier.offset) / spread;
    if !margin0.is_finite() || !margin1.is_finite() {
        return Ok(0.5);
    }
    Ok(0.5 * crate::accuracy::normal_cdf(margin1) + 0.5 * crate::accuracy::normal_cdf(-margin0))
}

/// The true-parameter rule the trained discriminant converges to.
pub fn optimal_classifier(model: &MeasurementModel, state: &ActivityState) -> Result<TrainedClassifier> {
    let nodes = state.active_nodes();
    let mu0 = restricted_mean(model.mu0(), &nodes);
    let mu1 = restricted_mean(model.mu1(), &nodes);
    if nodes.is_empty() {
        return Ok(TrainedClassifier {
            weights: DVector::zeros(0),
            offset: 0.0,
        });
    }
    let chol = covariance_factor(model, state)?;
    let weights = chol.solve(&(&mu1 - &mu0));
    let offset = -0.5 * weights.dot(&(&mu0 + &mu1));
    Ok(TrainedClassifier { weights, offset })
}

/// Monte Carlo mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonteCarloEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub trials: u64,
}

/// Estimates the expected generalization accuracy of Fisher training on
/// `samples_per_trial` fresh samples of one pattern, averaged over training
/// sets. Failed trainings score chance, as they would in deployment.
pub fn empirical_generalization_accuracy(
    model: &MeasurementModel,
    state: &ActivityState,
    samples_per_trial: usize,
    trials: u64,
    seed: u64,
) -> Result<MonteCarloEstimate> {
    if trials == 0 {
        return Err(Error::Contract("at least one trial is required".into()));
    }
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    for trial in 0..trials {
        let mut rng = stream_rng(seed, trial);
        let samples = sample_measurements(model, state, samples_per_trial, &mut rng)?;
        let acc = match train_fda(&samples) {
            Ok(clf) => conditional_accuracy(&clf, model, state)?,
            Err(_) => 0.5,
        };
        sum += acc;
        sum_sq += acc * acc;
    }
    let mean = sum / trials as f64;
    let var = (sum_sq / trials as f64 - mean * mean).max(0.0);
    Ok(MonteCarloEstimate {
        mean,
        std_error: (var / trials as f64).sqrt(),
        trials,
    })
}

// ============================================================================
// End-to-end network run
// ============================================================================

/// Outcome of one finite-battery run.
#[derive(Debug, Clone)]
pub struct SimOutcome {
    /// Occupancy while every battery still held charge.
    pub occupancy: Occupancy,
    /// Training samples actually collected per pattern.
    pub realized_samples: Vec<f64>,
    /// Accuracy of each pattern's trained (possibly pooled) classifier on
    /// fresh measurements.
    pub per_state_accuracy: Vec<f64>,
    /// Stationary-weighted accuracy of the trained classifiers.
    pub total_accuracy: f64,
    /// Wall-clock time from the end of training to the first battery death.
    pub operational_lifetime: f64,
    /// Active time each node spent before its battery drained.
    pub transmissions: Vec<f64>,
    pub seed: u64,
}

/// Runs one network life: a stationary start, unit-spaced training samples
/// for the first `alpha` fraction of the shortest expected lifetime, Fisher
/// training per classifier class, then operation until every battery is
/// drained.
///
/// Batteries drain at unit rate while transmitting, so each node delivers
/// exactly its battery capacity in active time. A node whose battery drains
/// falls silent immediately and the survivors keep running; the operational
/// lifetime is the span from the training cutoff to the first death.
pub fn end_to_end_sim(
    analysis: &CsmaAnalysis,
    conflict: &Graph,
    backoff: &BackoffConfig,
    model: &MeasurementModel,
    grouping: SampleGrouping,
    seed: u64,
) -> Result<SimOutcome> {
    let states = &analysis.states;
    let setup = chain_setup(states, conflict, backoff)?;
    let n = setup.n;
    if model.len() != n {
        return Err(Error::Contract(format!(
            "model over {} nodes for a network of {n}",
            model.len()
        )));
    }
    let budget = analysis.budget;
    let t_train_end = budget.alpha * analysis.training_lifetime;
    let rates = backoff.rates();
    let full_mask = if n == 32 { u32::MAX } else { (1u32 << n) - 1 };
    let mut rng = stream_rng(seed, 0);

    // Stationary start.
    let draw: f64 = rng.random();
    let mut mask = states[states.len() - 1].mask();
    let mut cumulative = 0.0;
    for (i, s) in states.iter().enumerate() {
        cumulative += analysis.pi[i];
        if draw < cumulative {
            mask = s.mask();
            break;
        }
    }

    let class_count = match grouping {
        SampleGrouping::PerState => states.len(),
        SampleGrouping::ByActiveCount => n + 1,
    };
    let class_of = |idx: usize, s: &ActivityState| match grouping {
        SampleGrouping::PerState => idx,
        SampleGrouping::ByActiveCount => s.active_count(),
    };
    let mut training: Vec<LabeledSamples> = vec![LabeledSamples::default(); class_count];
    let mut realized = vec![0.0; states.len()];

    let mut battery = vec![budget.l; n];
    let mut alive = full_mask;
    let mut t = 0.0;
    let mut next_epoch = 1.0;
    let mut first_death: Option<f64> = None;
    let mut node_time = vec![0.0; n];
    let mut state_time = vec![0.0; states.len()];
    let mut pre_death_elapsed = 0.0;
    let mut events = 0u64;

    while alive != 0 && events < MAX_RUN_EVENTS {
        let total = total_rate(mask, &setup, rates, alive);
        let dt_chain = if total > 0.0 {
            rng.sample::<f64, _>(Exp1) / total
        } else {
            f64::INFINITY
        };
        let mut dt_death = f64::INFINITY;
        let mut dying = usize::MAX;
        for i in 0..n {
            if mask & (1 << i) != 0 && battery[i] < dt_death {
                dt_death = battery[i];
                dying = i;
            }
        }
        let dt_epoch = if next_epoch <= t_train_end {
            next_epoch - t
        } else {
            f64::INFINITY
        };
        let dt = dt_chain.min(dt_death).min(dt_epoch);
        if !dt.is_finite() {
            break;
        }

        for i in 0..n {
            if mask & (1 << i) != 0 {
                battery[i] -= dt;
            }
        }
        if first_death.is_none() {
            for i in 0..n {
                if mask & (1 << i) != 0 {
                    node_time[i] += dt;
                }
            }
            let idx = setup.index_of_mask[&mask];
            state_time[idx] += dt;
            pre_death_elapsed += dt;
        }
        t += dt;

        if dt_death <= dt_epoch && dt_death <= dt_chain {
            battery[dying] = 0.0;
            mask &= !(1 << dying);
            alive &= !(1 << dying);
            if first_death.is_none() {
                first_death = Some(t);
            }
        } else if dt_epoch <= dt_chain {
            let idx = setup.index_of_mask[&mask];
            let state = &states[idx];
            let funded = state
                .active_nodes()
                .iter()
                .all(|&i| battery[i] > 0.0);
            if funded {
                let label = rng.random::<bool>();
                let nodes = state.active_nodes();
                let d = nodes.len();
                let chol = covariance_factor(model, state)?;
                let z = DVector::from_fn(d, |_, _| rng.sample(StandardNormal));
                let base = if label { model.mu1() } else { model.mu0() };
                let x = restricted_mean(base, &nodes) + chol.l() * z;
                training[class_of(idx, state)].push(x, label);
                realized[idx] += 1.0;
            }
            next_epoch += 1.0;
        } else {
            let target = rng.random::<f64>() * total;
            let (node, activates) = pick_transition(mask, &setup, rates, alive, target);
            if activates {
                mask |= 1 << node;
            } else {
                mask &= !(1 << node);
            }
            events += 1;
        }
    }

    let classifiers: Vec<Option<TrainedClassifier>> =
        training.iter().map(|s| train_fda(s).ok()).collect();
    let mut per_state_accuracy = vec![0.5; states.len()];
    let mut total_accuracy = 0.0;
    for (i, s) in states.iter().enumerate() {
        per_state_accuracy[i] = match &classifiers[class_of(i, s)] {
            Some(clf) if clf.weights.len() == s.active_count() => {
                conditional_accuracy(clf, model, s)?
            }
            _ => 0.5,
        };
        total_accuracy += analysis.pi[i] * per_state_accuracy[i];
    }

    let death = first_death.unwrap_or(t);
    Ok(SimOutcome {
        occupancy: Occupancy {
            node_fraction: node_time.iter().map(|&x| x / pre_death_elapsed).collect(),
            state_fraction: state_time.iter().map(|&x| x / pre_death_elapsed).collect(),
            elapsed: pre_death_elapsed,
            events,
        },
        realized_samples: realized,
        per_state_accuracy,
        total_accuracy,
        operational_lifetime: (death - t_train_end).max(0.0),
        transmissions: battery.iter().map(|&b| budget.l - b).collect(),
        seed,
    })
}

// ============================================================================
// Tests
// ============================================================================
