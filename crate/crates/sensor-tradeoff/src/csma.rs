//! Product-form stationary analysis of the CSMA activity chain.
//!
//! Each inactive node attempts to transmit after an exponential back-off and
//! is admitted whenever none of its conflict neighbors is active; active
//! nodes transmit for an exponential unit-mean duration. The resulting
//! activity chain over the independent sets is reversible with stationary
//! weight `prod_i nu_i^{w_i}`, which yields throughput (the long-run active
//! fraction of each node), battery lifetime (transmissions per battery over
//! throughput), and the expected number of training samples each pattern
//! collects while the network trains for a fraction `alpha` of its life.

use crate::topology::ActivityState;
use crate::{Error, Result};

// ============================================================================
// Inputs
// ============================================================================

/// Per-node back-off attempt rates.
#[derive(Debug, Clone, PartialEq)]
pub struct BackoffConfig {
    rates: Vec<f64>,
}

impl BackoffConfig {
    /// Validates per-node rates: all strictly positive and finite.
    pub fn new(rates: Vec<f64>) -> Result<Self> {
        if rates.is_empty() {
            return Err(Error::Contract("back-off configuration has no nodes".into()));
        }
        for (i, &r) in rates.iter().enumerate() {
            if !(r > 0.0 && r.is_finite()) {
                return Err(Error::Contract(format!(
                    "back-off rate {r} for node {} must be positive and finite",
                    i + 1
                )));
            }
        }
        Ok(BackoffConfig { rates })
    }

    /// The same rate for every node.
    pub fn uniform(n: usize, rate: f64) -> Result<Self> {
        BackoffConfig::new(vec![rate; n])
    }

    pub fn rates(&self) -> &[f64] {
        &self.rates
    }

    pub fn len(&self) -> usize {
        self.rates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rates.is_empty()
    }
}

/// Back-off rates of the three-sensor chain preset: the middle node runs at
/// `eta * (eta + 1)` against `eta` at the ends, which equalizes throughput
/// across the chain.
pub fn chain3_rates(eta: f64) -> [f64; 3] {
    [eta, eta * (eta + 1.0), eta]
}

/// Battery capacity and training split.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyBudget {
    /// Transmissions (equivalently, measurements) one battery can fund.
    pub l: f64,
    /// Fraction of each node's lifetime spent collecting training samples.
    pub alpha: f64,
}

impl EnergyBudget {
    pub fn new(l: f64, alpha: f64) -> Result<Self> {
        if !(l > 0.0 && l.is_finite()) {
            return Err(Error::Contract(format!(
                "battery capacity {l} must be positive and finite"
            )));
        }
        if !(0.0..1.0).contains(&alpha) {
            return Err(Error::Contract(format!(
                "training fraction {alpha} must lie in [0, 1)"
            )));
        }
        Ok(EnergyBudget { l, alpha })
    }
}

/// How training samples are shared between pattern classifiers.
///
/// `PerState` trains one classifier per activity pattern on that pattern's
/// own samples. `ByActiveCount` pools the samples of all patterns with the
/// same number of active sensors into one classifier per count; this is only
/// meaningful when those patterns are statistically exchangeable (independent
/// identically distributed measurements under a fully symmetric
/// configuration), where it matches how the symmetric closed forms count
/// samples.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SampleGrouping {
    PerState,
    ByActiveCount,
}

/// What to do when per-node lifetimes differ.
///
/// Training must end at one common time. `MinLifetime` trains for `alpha`
/// times the shortest node lifetime; `RequireEqual` rejects configurations
/// whose lifetimes differ by more than 1e-9 relative.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LifetimePolicy {
    MinLifetime,
    RequireEqual,
}

// ============================================================================
// Stationary analysis operations
// ============================================================================

fn check_states(states: &[ActivityState]) -> Result<usize> {
    let first = states
        .first()
        .ok_or_else(|| Error::Contract("empty pattern list".into()))?;
    let n = first.len();
    if states.iter().any(|s| s.len() != n) {
        return Err(Error::Contract(
            "patterns are defined over differing node counts".into(),
        ));
    }
    Ok(n)
}

/// Stationary law of the activity chain: weight `prod nu_i^{w_i}` per
/// pattern, normalized over the admissible patterns. Returns the
/// probabilities (aligned with `states`) and the normalizing constant.
pub fn stationary_distribution(
    states: &[ActivityState],
    backoff: &BackoffConfig,
) -> Result<(Vec<f64>, f64)> {
    let n = check_states(states)?;
    if backoff.len() != n {
        return Err(Error::Contract(format!(
            "{} back-off rates for patterns over {n} nodes",
            backoff.len()
        )));
    }
    let weights: Vec<f64> = states
        .iter()
        .map(|s| {
            s.active_nodes()
                .iter()
                .fold(1.0, |w, &i| w * backoff.rates()[i])
        })
        .collect();
    let z: f64 = weights.iter().sum();
    if !z.is_finite() {
        return Err(Error::Contract(
            "stationary weights overflow; back-off rates are too large for this \
             pattern space"
                .into(),
        ));
    }
    Ok((weights.iter().map(|w| w / z).collect(), z))
}

/// Long-run fraction of time each node spends transmitting.
pub fn throughput(states: &[ActivityState], pi: &[f64]) -> Result<Vec<f64>> {
    let n = check_states(states)?;
    if pi.len() != states.len() {
        return Err(Error::Contract(format!(
            "{} probabilities for {} patterns",
            pi.len(),
            states.len()
        )));
    }
    let mut theta = vec![0.0; n];
    for (s, &p) in states.iter().zip(pi) {
        for i in s.active_nodes() {
            theta[i] += p;
        }
    }
    Ok(theta)
}

/// Battery lifetimes `T_i = l / theta_i` and operational lifetimes
/// `U_i = (1 - alpha) T_i`.
///
/// A node with zero throughput never drains its battery; its lifetime is the
/// distinguished value `f64::INFINITY` rather than an error.
pub fn lifetimes(theta: &[f64], budget: &EnergyBudget) -> (Vec<f64>, Vec<f64>) {
    let lifetime: Vec<f64> = theta
        .iter()
        .map(|&t| if t > 0.0 { budget.l / t } else { f64::INFINITY })
        .collect();
    let op: Vec<f64> = lifetime.iter().map(|&t| (1.0 - budget.alpha) * t).collect();
    (lifetime, op)
}

/// The single training horizon implied by per-node lifetimes under `policy`.
pub fn training_lifetime(lifetime: &[f64], policy: LifetimePolicy) -> Result<f64> {
    let min = lifetime.iter().copied().fold(f64::INFINITY, f64::min);
    let max = lifetime.iter().copied().fold(0.0f64, f64::max);
    match policy {
        LifetimePolicy::MinLifetime => Ok(min),
        LifetimePolicy::RequireEqual => {
            if max - min > 1e-9 * max {
                Err(Error::Contract(format!(
                    "per-node lifetimes differ (min {min}, max {max}) and the \
                     policy requires equality"
                )))
            } else {
                Ok(min)
            }
        }
    }
}

/// Expected number of training samples per pattern: the network trains for
/// time `alpha * t_train`, taking one sample per unit time, and each sample
/// lands in the pattern occupied at that instant.
pub fn training_samples(pi: &[f64], t_train: f64, alpha: f64) -> Result<Vec<f64>> {
    if !(t_train > 0.0) {
        return Err(Error::Contract(format!(
            "training lifetime {t_train} must be positive"
        )));
    }
    Ok(pi.iter().map(|&p| alpha * t_train * p).collect())
}

/// Expected number of active sensors under the stationary law.
pub fn expected_active(states: &[ActivityState], pi: &[f64]) -> Result<f64> {
    check_states(states)?;
    if pi.len() != states.len() {
        return Err(Error::Contract(format!(
            "{} probabilities for {} patterns",
            pi.len(),
            states.len()
        )));
    }
    Ok(states
        .iter()
        .zip(pi)
        .map(|(s, &p)| p * s.active_count() as f64)
        .sum())
}

/// Probability-weighted mean sample count over classifier classes. Inputs are
/// aligned vectors of class probabilities and class sample counts; pass
/// per-pattern vectors for per-pattern classifiers or pooled vectors for
/// grouped classifiers.
pub fn mean_training_samples(class_pi: &[f64], class_samples: &[f64]) -> Result<f64> {
    if class_pi.len() != class_samples.len() {
        return Err(Error::Contract(format!(
            "{} class probabilities against {} sample counts",
            class_pi.len(),
            class_samples.len()
        )));
    }
    Ok(class_pi
        .iter()
        .zip(class_samples)
        .map(|(&p, &m)| p * m)
        .sum())
}

// ============================================================================
// Bundled analysis
// ============================================================================

/// Full stationary analysis of one configuration.
#[derive(Debug, Clone)]
pub struct CsmaAnalysis {
    pub states: Vec<ActivityState>,
    /// Stationary probability per pattern.
    pub pi: Vec<f64>,
    /// Normalizing constant of the stationary weights.
    pub z: f64,
    /// Long-run transmitting fraction per node.
    pub throughput: Vec<f64>,
    /// Battery lifetime per node.
    pub lifetime: Vec<f64>,
    /// Post-training operational lifetime per node.
    pub op_lifetime: Vec<f64>,
    /// Expected training samples per pattern.
    pub samples: Vec<f64>,
    /// Common training horizon the sample counts are based on.
    pub training_lifetime: f64,
    /// Budget the analysis was computed under.
    pub budget: EnergyBudget,
}

impl CsmaAnalysis {
    pub fn compute(
        states: Vec<ActivityState>,
        backoff: &BackoffConfig,
        budget: &EnergyBudget,
        policy: LifetimePolicy,
    ) -> Result<Self> {
        let (pi, z) = stationary_distribution(&states, backoff)?;
        let theta = throughput(&states, &pi)?;
        let (lifetime, op_lifetime) = lifetimes(&theta, budget);
        let t_train = training_lifetime(&lifetime, policy)?;
        let samples = training_samples(&pi, t_train, budget.alpha)?;
        Ok(CsmaAnalysis {
            states,
            pi,
            z,
            throughput: theta,
            lifetime,
            op_lifetime,
            samples,
            training_lifetime: t_train,
            budget: *budget,
        })
    }

    /// Expected active-sensor count.
    pub fn expected_active(&self) -> f64 {
        expected_active(&self.states, &self.pi).expect("analysis vectors are aligned")
    }
}

// ============================================================================
// Symmetric closed forms
// ============================================================================

fn binomial(n: usize, k: usize) -> f64 {
    let mut c: u64 = 1;
    for i in 0..k.min(n - k) {
        c = c * (n - i) as u64 / (i + 1) as u64;
    }
    c as f64
}

/// Closed forms for `n` conflict-free sensors sharing one back-off rate.
///
/// Patterns with the same active count are exchangeable, so everything is a
/// function of the count: the count follows a binomial law with success
/// probability `nu / (nu + 1)`, every node transmits a fraction
/// `nu / (nu + 1)` of the time, and the pooled per-count sample totals follow
/// by summing the per-pattern counts.
#[derive(Debug, Clone)]
pub struct IndepClosedForms {
    /// Probability that exactly `k` sensors are active, `k = 0..=n`.
    pub pi_class: Vec<f64>,
    /// Common per-node transmitting fraction.
    pub theta: f64,
    /// Common battery lifetime.
    pub lifetime: f64,
    /// Common operational lifetime.
    pub op_lifetime: f64,
    /// Pooled training samples per active count, `k = 0..=n`.
    pub m_class: Vec<f64>,
}

pub fn indep_closed_forms(n: usize, nu: f64, budget: &EnergyBudget) -> Result<IndepClosedForms> {
    if n == 0 {
        return Err(Error::Contract("closed forms need at least one node".into()));
    }
    if !(nu > 0.0 && nu.is_finite()) {
        return Err(Error::Contract(format!(
            "back-off rate {nu} must be positive and finite"
        )));
    }
    let np1 = nu + 1.0;
    let pi_class: Vec<f64> = (0..=n)
        .map(|k| binomial(n, k) * nu.powi(k as i32) / np1.powi(n as i32))
        .collect();
    let theta = nu / np1;
    let lifetime = budget.l * np1 / nu;
    let op_lifetime = (1.0 - budget.alpha) * lifetime;
    let m_class: Vec<f64> = (0..=n)
        .map(|k| {
            budget.alpha * budget.l * binomial(n, k) * nu.powi(k as i32 - 1)
                / np1.powi(n as i32 - 1)
        })
        .collect();
    Ok(IndepClosedForms {
        pi_class,
        theta,
        lifetime,
        op_lifetime,
        m_class,
    })
}

/// Closed forms for the three-sensor chain preset with end rate `eta`.
///
/// Pattern order matches enumeration order: empty, n1, n2, n3, n1+n3.
#[derive(Debug, Clone)]
pub struct Chain3ClosedForms {
    pub z: f64,
    pub pi: [f64; 5],
    /// Common per-node transmitting fraction `eta / (2 eta + 1)`.
    pub theta: f64,
    pub lifetime: f64,
    pub op_lifetime: f64,
    /// Training samples per pattern, in pattern order.
    pub m: [f64; 5],
}

pub fn chain3_closed_forms(eta: f64, budget: &EnergyBudget) -> Result<Chain3ClosedForms> {
    if !(eta > 0.0 && eta.is_finite()) {
        return Err(Error::Contract(format!(
            "chain rate {eta} must be positive and finite"
        )));
    }
    let z = 2.0 * eta * eta + 3.0 * eta + 1.0;
    let pi = [
        1.0 / z,
        eta / z,
        eta * (eta + 1.0) / z,
        eta / z,
        eta * eta / z,
    ];
    let theta = eta / (2.0 * eta + 1.0);
    let lifetime = budget.l * (2.0 * eta + 1.0) / eta;
    let op_lifetime = (1.0 - budget.alpha) * lifetime;
    let al = budget.alpha * budget.l;
    let m = [
        al / (eta * eta + eta),
        al / (eta + 1.0),
        al,
        al / (eta + 1.0),
        al * eta / (eta + 1.0),
    ];
    Ok(Chain3ClosedForms {
        z,
        pi,
        theta,
        lifetime,
        op_lifetime,
        m,
    })
}

// ============================================================================
// Tests
// ============================================================================
