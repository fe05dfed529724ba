//! Lifetime-versus-accuracy analysis over back-off rate and training split.
//!
//! A [`Scenario`] bundles a conflict graph, a measurement model, and a
//! sample-pooling choice, and exposes the derived quantities as functions of
//! the back-off rate and the training fraction: single-point evaluation,
//! rate sweeps, the parametric lifetime-accuracy frontier, the infinite-rate
//! limit, and constrained lifetime maximization with an explicit unbounded
//! outcome when pushing the rate without bound is optimal.

use crate::accuracy::{
    raudys_accuracy, state_weighted_accuracy_from_separations, AccuracyBreakdown,
};
use crate::csma::{
    chain3_rates, BackoffConfig, CsmaAnalysis, EnergyBudget, LifetimePolicy, SampleGrouping,
};
use crate::gmrf::{CorrelationDecay, MeasurementModel};
use crate::topology::{build_nn_graph, enumerate_states, ActivityState, Graph, SensorLayout};
use crate::{Error, Result};

// ============================================================================
// Scenarios
// ============================================================================

/// Which preset a scenario was built from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ScenarioKind {
    /// Conflict-free sensors with uncorrelated measurements and one shared
    /// back-off rate.
    Independent { n: usize },
    /// Three sensors on a line, middle node in conflict with both ends,
    /// rates balanced so all nodes share one throughput.
    Chain3 { g: f64 },
    /// Nearest-neighbor conflict and correlation structure from a layout.
    Custom,
}

/// A fixed network whose lifetime and accuracy are studied as functions of
/// the back-off rate and the training fraction.
#[derive(Debug, Clone)]
pub struct Scenario {
    kind: ScenarioKind,
    layout: Option<SensorLayout>,
    conflict: Graph,
    model: MeasurementModel,
    states: Vec<ActivityState>,
    grouping: SampleGrouping,
    l: f64,
    sigma_sq: f64,
    /// Per-pattern separation, fixed across rates and training splits.
    delta_sq: Vec<f64>,
}

fn check_battery(l: f64) -> Result<()> {
    if !(l > 0.0 && l.is_finite()) {
        return Err(Error::Contract(format!(
            "battery capacity {l} must be positive and finite"
        )));
    }
    Ok(())
}

impl Scenario {
    /// `n` conflict-free sensors, uncorrelated measurements, per-count
    /// sample pooling.
    pub fn independent(n: usize, l: f64, sigma_sq: f64) -> Result<Self> {
        check_battery(l)?;
        let conflict = Graph::edgeless(n);
        let states = enumerate_states(&conflict)?;
        let model = MeasurementModel::iid(n, sigma_sq)?;
        Self::assemble(
            ScenarioKind::Independent { n },
            None,
            conflict,
            model,
            states,
            SampleGrouping::ByActiveCount,
            l,
            sigma_sq,
        )
    }

    /// The three-sensor chain preset: adjacent-sensor correlation `g`,
    /// per-pattern training.
    pub fn chain3(l: f64, sigma_sq: f64, g: f64) -> Result<Self> {
        check_battery(l)?;
        let layout = SensorLayout::line(3)?;
        let graph = Graph::new(3, &[(0, 1), (1, 2)])?;
        let model =
            MeasurementModel::build(&layout, &graph, sigma_sq, &CorrelationDecay::constant(g)?)?;
        let states = enumerate_states(&graph)?;
        Self::assemble(
            ScenarioKind::Chain3 { g },
            Some(layout),
            graph,
            model,
            states,
            SampleGrouping::PerState,
            l,
            sigma_sq,
        )
    }

    /// A layout-driven network: the nearest-neighbor graph provides both the
    /// conflict relation and the correlation structure. Patterns train
    /// separately, since correlated geometry breaks per-count exchangeability.
    pub fn custom(
        layout: SensorLayout,
        l: f64,
        sigma_sq: f64,
        decay: &CorrelationDecay,
    ) -> Result<Self> {
        check_battery(l)?;
        let graph = build_nn_graph(&layout)?;
        let model = MeasurementModel::build(&layout, &graph, sigma_sq, decay)?;
        let states = enumerate_states(&graph)?;
        Self::assemble(
            ScenarioKind::Custom,
            Some(layout),
            graph,
            model,
            states,
            SampleGrouping::PerState,
            l,
            sigma_sq,
        )
    }

    #[allow(clippy::too_many_arguments)]
    fn assemble(
        kind: ScenarioKind,
        layout: Option<SensorLayout>,
        conflict: Graph,
        model: MeasurementModel,
        states: Vec<ActivityState>,
        grouping: SampleGrouping,
        l: f64,
        sigma_sq: f64,
    ) -> Result<Self> {
        let delta_sq: Vec<f64> = states
            .iter()
            .map(|s| model.mahalanobis_sq(s))
            .collect::<Result<_>>()?;
        Ok(Scenario {
            kind,
            layout,
            conflict,
            model,
            states,
            grouping,
            l,
            sigma_sq,
            delta_sq,
        })
    }

    pub fn kind(&self) -> ScenarioKind {
        self.kind
    }

    pub fn layout(&self) -> Option<&SensorLayout> {
        self.layout.as_ref()
    }

    pub fn conflict(&self) -> &Graph {
        &self.conflict
    }

    pub fn model(&self) -> &MeasurementModel {
        &self.model
    }

    pub fn states(&self) -> &[ActivityState] {
        &self.states
    }

    pub fn grouping(&self) -> SampleGrouping {
        self.grouping
    }

    pub fn battery(&self) -> f64 {
        self.l
    }

    pub fn noise_var(&self) -> f64 {
        self.sigma_sq
    }

    pub fn separations(&self) -> &[f64] {
        &self.delta_sq
    }

    /// Per-node back-off rates at sweep parameter `rate`. The chain preset
    /// balances its middle node at `rate * (rate + 1)`; other scenarios use
    /// the rate uniformly.
    pub fn backoff_for(&self, rate: f64) -> Result<BackoffConfig> {
        match self.kind {
            ScenarioKind::Chain3 { .. } => BackoffConfig::new(chain3_rates(rate).to_vec()),
            _ => BackoffConfig::uniform(self.conflict.node_count(), rate),
        }
    }

    /// Polynomial degree of each node's back-off rate in the sweep
    /// parameter. Every rate is monic in that parameter, so these degrees
    /// alone decide which patterns dominate as the rate grows.
    pub fn rate_degrees(&self) -> Vec<usize> {
        match self.kind {
            ScenarioKind::Chain3 { .. } => vec![1, 2, 1],
            _ => vec![1; self.conflict.node_count()],
        }
    }
}

// ============================================================================
// Grids
// ============================================================================

/// `points` logarithmically spaced values from `lo` to `hi` inclusive.
///
/// Interior points come from exact base-10 exponent arithmetic, so a grid
/// whose exponent range crosses zero contains 1 exactly; both endpoints are
/// returned verbatim.
pub fn log_spaced(lo: f64, hi: f64, points: usize) -> Result<Vec<f64>> {
    if !(lo > 0.0 && hi > lo && hi.is_finite()) || points < 2 {
        return Err(Error::Contract(format!(
            "log grid needs 0 < lo < hi and at least two points, got [{lo}, {hi}] with {points}"
        )));
    }
    let (e_lo, e_hi) = (lo.log10(), hi.log10());
    let step = (e_hi - e_lo) / (points - 1) as f64;
    Ok((0..points)
        .map(|i| {
            if i == 0 {
                lo
            } else if i == points - 1 {
                hi
            } else {
                10f64.powf(e_lo + step * i as f64)
            }
        })
        .collect())
}

/// `points` evenly spaced values from `lo` to `hi` inclusive.
pub fn lin_spaced(lo: f64, hi: f64, points: usize) -> Result<Vec<f64>> {
    if !(lo.is_finite() && hi.is_finite() && hi > lo) || points < 2 {
        return Err(Error::Contract(format!(
            "linear grid needs finite lo < hi and at least two points, got [{lo}, {hi}] with {points}"
        )));
    }
    let step = (hi - lo) / (points - 1) as f64;
    Ok((0..points)
        .map(|i| {
            if i == points - 1 {
                hi
            } else {
                lo + step * i as f64
            }
        })
        .collect())
}

// ============================================================================
// Point evaluation and sweeps
// ============================================================================

/// Full analysis of one `(rate, alpha)` operating point.
#[derive(Debug, Clone)]
pub struct PointEval {
    pub rate: f64,
    pub alpha: f64,
    /// Operational lifetime: the post-training span until the first battery
    /// is expected to drain.
    pub u: f64,
    pub analysis: CsmaAnalysis,
    pub breakdown: AccuracyBreakdown,
}

fn min_lifetime(analysis: &CsmaAnalysis) -> f64 {
    analysis
        .lifetime
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

impl Scenario {
    /// Evaluates lifetime and accuracy at one operating point.
    pub fn evaluate(&self, rate: f64, alpha: f64) -> Result<PointEval> {
        let backoff = self.backoff_for(rate)?;
        let budget = EnergyBudget::new(self.l, alpha)?;
        let analysis = CsmaAnalysis::compute(
            self.states.clone(),
            &backoff,
            &budget,
            LifetimePolicy::MinLifetime,
        )?;
        let breakdown =
            state_weighted_accuracy_from_separations(&analysis, &self.delta_sq, self.grouping)?;
        let u = (1.0 - alpha) * min_lifetime(&analysis);
        Ok(PointEval {
            rate,
            alpha,
            u,
            analysis,
            breakdown,
        })
    }
}

/// One sweep operating point.
#[derive(Debug, Clone)]
pub struct SweepRow {
    pub rate: f64,
    pub alpha: f64,
    /// Operational lifetime.
    pub u: f64,
    /// Expected number of simultaneously active sensors.
    pub k_bar: f64,
    /// Mean training samples of the classifier serving the pattern active at
    /// a stationary instant.
    pub m_bar: f64,
    /// Stationary-weighted trained accuracy.
    pub accuracy: f64,
    /// Stationary-weighted Bayes accuracy.
    pub bayes_accuracy: f64,
    /// Trained accuracy per pattern, aligned with the scenario's patterns.
    pub per_state_accuracy: Vec<f64>,
    /// Training samples per classifier class, aligned with the table's class
    /// labels.
    pub class_samples: Vec<f64>,
    /// Trained accuracy per classifier class, aligned with the table's class
    /// labels.
    pub class_accuracy: Vec<f64>,
}

/// Sweep results plus the label rows that give its vectors meaning.
#[derive(Debug, Clone)]
pub struct SweepTable {
    pub state_labels: Vec<String>,
    pub class_labels: Vec<String>,
    pub rows: Vec<SweepRow>,
}

fn check_grid(name: &str, grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::Contract(format!("{name} grid is empty")));
    }
    for &x in grid {
        if !(x > 0.0 && x.is_finite()) {
            return Err(Error::Contract(format!(
                "{name} grid value {x} must be positive and finite"
            )));
        }
    }
    if grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Contract(format!(
            "{name} grid must be strictly increasing"
        )));
    }
    Ok(())
}

impl Scenario {
    /// Evaluates every rate in an ascending grid at one training fraction.
    pub fn sweep(&self, rate_grid: &[f64], alpha: f64) -> Result<SweepTable> {
        check_grid("rate", rate_grid)?;
        let mut rows = Vec::with_capacity(rate_grid.len());
        let mut class_labels = Vec::new();
        let mut state_labels = Vec::new();
        for &rate in rate_grid {
            let point = self.evaluate(rate, alpha)?;
            if class_labels.is_empty() {
                class_labels = point
                    .breakdown
                    .classes
                    .iter()
                    .map(|c| c.label.clone())
                    .collect();
                state_labels = self.states.iter().map(|s| s.label()).collect();
            }
            let m_bar = point
                .breakdown
                .classes
                .iter()
                .map(|c| c.probability * c.samples)
                .sum();
            rows.push(SweepRow {
                rate,
                alpha,
                u: point.u,
                k_bar: point.analysis.expected_active(),
                m_bar,
                accuracy: point.breakdown.total,
                bayes_accuracy: point.breakdown.bayes_total,
                per_state_accuracy: point.breakdown.per_state,
                class_samples: point.breakdown.classes.iter().map(|c| c.samples).collect(),
                class_accuracy: point.breakdown.classes.iter().map(|c| c.accuracy).collect(),
            });
        }
        Ok(SweepTable {
            state_labels,
            class_labels,
            rows,
        })
    }
}

// ============================================================================
// Frontier
// ============================================================================

/// One point of the lifetime-accuracy frontier family.
#[derive(Debug, Clone, PartialEq)]
pub struct FrontierRow {
    /// Training fraction; 0 marks the ideal-classifier reference curve.
    pub alpha: f64,
    pub rate: f64,
    pub u: f64,
    pub accuracy: f64,
    pub bayes_accuracy: f64,
    /// Whether no other trained row offers both more lifetime and more
    /// accuracy. Reference rows are never flagged.
    pub envelope: bool,
}

impl Scenario {
    /// Parametric `(U, A)` curves over the rate grid, one per training
    /// fraction, plus an ideal-classifier reference curve at `alpha = 0`.
    /// The flagged envelope is the Pareto set of the trained rows.
    pub fn frontier(&self, rate_grid: &[f64], alphas: &[f64]) -> Result<Vec<FrontierRow>> {
        check_grid("rate", rate_grid)?;
        if alphas.is_empty() {
            return Err(Error::Contract("alpha list is empty".into()));
        }
        for &a in alphas {
            if !(a > 0.0 && a < 1.0) {
                return Err(Error::Contract(format!(
                    "frontier training fraction {a} must lie in (0, 1)"
                )));
            }
        }
        let mut rows = Vec::with_capacity((alphas.len() + 1) * rate_grid.len());
        for &alpha in alphas {
            for &rate in rate_grid {
                let point = self.evaluate(rate, alpha)?;
                rows.push(FrontierRow {
                    alpha,
                    rate,
                    u: point.u,
                    accuracy: point.breakdown.total,
                    bayes_accuracy: point.breakdown.bayes_total,
                    envelope: false,
                });
            }
        }
        let trained = rows.len();
        for &rate in rate_grid {
            let point = self.evaluate(rate, 0.0)?;
            rows.push(FrontierRow {
                alpha: 0.0,
                rate,
                u: point.u,
                accuracy: point.breakdown.bayes_total,
                bayes_accuracy: point.breakdown.bayes_total,
                envelope: false,
            });
        }
        for i in 0..trained {
            let dominated = (0..trained).any(|j| {
                j != i
                    && rows[j].u >= rows[i].u
                    && rows[j].accuracy >= rows[i].accuracy
                    && (rows[j].u > rows[i].u || rows[j].accuracy > rows[i].accuracy)
            });
            rows[i].envelope = !dominated;
        }
        Ok(rows)
    }
}

// ============================================================================
// Infinite-rate limit
// ============================================================================

/// Limiting behavior as the back-off rate grows without bound.
#[derive(Debug, Clone)]
pub struct RateLimit {
    /// Limiting operational lifetime.
    pub u: f64,
    /// Limiting stationary-weighted trained accuracy.
    pub accuracy: f64,
    /// Patterns that retain probability in the limit, with their shares.
    pub dominant: Vec<(String, f64)>,
}

impl Scenario {
    /// Dominant-pattern limit: as the rate grows, probability concentrates
    /// on the patterns whose stationary weight has maximal polynomial degree
    /// in the rate, shared equally because every rate is monic.
    pub fn limit_at_infinite_rate(&self, alpha: f64) -> Result<RateLimit> {
        let budget = EnergyBudget::new(self.l, alpha)?;
        let degrees = self.rate_degrees();
        let degree_of = |s: &ActivityState| -> usize {
            s.active_nodes().iter().map(|&i| degrees[i]).sum()
        };
        let max_degree = self
            .states
            .iter()
            .map(degree_of)
            .max()
            .expect("scenario has at least the all-inactive pattern");
        let dominant_idx: Vec<usize> = self
            .states
            .iter()
            .enumerate()
            .filter(|(_, s)| degree_of(s) == max_degree)
            .map(|(i, _)| i)
            .collect();
        let share = 1.0 / dominant_idx.len() as f64;
        let n = self.conflict.node_count();
        let mut pi = vec![0.0; self.states.len()];
        let mut throughput = vec![0.0; n];
        for &i in &dominant_idx {
            pi[i] = share;
            for node in self.states[i].active_nodes() {
                throughput[node] += share;
            }
        }
        let busiest = throughput.iter().copied().fold(0.0f64, f64::max);
        let t_limit = self.l / busiest;
        let (lifetime, op_lifetime) = crate::csma::lifetimes(&throughput, &budget);
        let samples: Vec<f64> = pi.iter().map(|&p| alpha * t_limit * p).collect();
        let analysis = CsmaAnalysis {
            states: self.states.clone(),
            pi,
            z: f64::INFINITY,
            throughput,
            lifetime,
            op_lifetime,
            samples,
            training_lifetime: t_limit,
            budget,
        };
        let breakdown =
            state_weighted_accuracy_from_separations(&analysis, &self.delta_sq, self.grouping)?;
        Ok(RateLimit {
            u: (1.0 - alpha) * t_limit,
            accuracy: breakdown.total,
            dominant: dominant_idx
                .iter()
                .map(|&i| (self.states[i].label(), share))
                .collect(),
        })
    }
}

// ============================================================================
// Constrained lifetime maximization
// ============================================================================

/// The maximizing back-off rate: a finite value, or growth without bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RateStar {
    Finite(f64),
    Unbounded,
}

/// Outcome of lifetime maximization under an accuracy floor.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimumReport {
    pub beta: f64,
    pub feasible: bool,
    /// Maximizing training fraction; NaN when infeasible.
    pub alpha_star: f64,
    /// Maximizing rate; `None` when infeasible.
    pub rate_star: Option<RateStar>,
    /// Lifetime attained; NaN when infeasible.
    pub u_star: f64,
    /// Accuracy attained at the maximizer; NaN when infeasible.
    pub accuracy: f64,
}

impl OptimumReport {
    fn infeasible(beta: f64) -> Self {
        OptimumReport {
            beta,
            feasible: false,
            alpha_star: f64::NAN,
            rate_star: None,
            u_star: f64::NAN,
            accuracy: f64::NAN,
        }
    }
}

/// Accuracy floors are honored to this slack when checking feasibility.
pub const FEASIBILITY_SLACK: f64 = 1e-9;

/// Per-rate cache: accuracy at any training fraction follows from the class
/// structure because sample counts scale linearly in the fraction.
struct RateEval {
    t_min: f64,
    /// `(probability, delta_sq, n_active, samples at alpha = 1)` per class.
    classes: Vec<(f64, f64, usize, f64)>,
}

const ALPHA_REF: f64 = 0.5;

impl Scenario {
    fn rate_eval(&self, rate: f64) -> Result<RateEval> {
        let backoff = self.backoff_for(rate)?;
        let budget = EnergyBudget::new(self.l, ALPHA_REF)?;
        let analysis = CsmaAnalysis::compute(
            self.states.clone(),
            &backoff,
            &budget,
            LifetimePolicy::MinLifetime,
        )?;
        let breakdown =
            state_weighted_accuracy_from_separations(&analysis, &self.delta_sq, self.grouping)?;
        Ok(RateEval {
            t_min: min_lifetime(&analysis),
            classes: breakdown
                .classes
                .iter()
                .map(|c| (c.probability, c.delta_sq, c.n_active, c.samples / ALPHA_REF))
                .collect(),
        })
    }
}

fn cached_accuracy(eval: &RateEval, alpha: f64) -> Result<f64> {
    let mut total = 0.0;
    for &(prob, delta_sq, n_active, samples_full) in &eval.classes {
        total += prob * raudys_accuracy(delta_sq, n_active, alpha * samples_full)?;
    }
    Ok(total)
}

/// Golden-section maximization returning the best point ever evaluated,
/// which can never fall below either bracket endpoint.
fn golden_max(
    mut f: impl FnMut(f64) -> Result<f64>,
    lo: f64,
    hi: f64,
    iterations: usize,
) -> Result<(f64, f64)> {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let mut best = (lo, f(lo)?);
    let at_hi = f(hi)?;
    if at_hi > best.1 {
        best = (hi, at_hi);
    }
    let mut a = lo;
    let mut b = hi;
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c)?;
    let mut fd = f(d)?;
    for _ in 0..iterations {
        if fc > best.1 {
            best = (c, fc);
        }
        if fd > best.1 {
            best = (d, fd);
        }
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d)?;
        }
    }
    Ok(best)
}

impl Scenario {
    /// Maximizes the operational lifetime subject to `accuracy >= beta`
    /// (minus [`FEASIBILITY_SLACK`]).
    ///
    /// Exhaustive search over the grids feeds one golden-section refinement
    /// pass per axis around the incumbent, which never worsens it. When the
    /// incumbent sits at the top of the (cap-clamped) rate grid and the
    /// infinite-rate limit beats its lifetime at the accuracy floor, or when
    /// only the limit is feasible at all, the reported rate is
    /// [`RateStar::Unbounded`]; when nothing meets the floor, the report is
    /// marked infeasible.
    pub fn optimize(
        &self,
        beta: f64,
        alpha_grid: &[f64],
        rate_grid: &[f64],
        rate_cap: f64,
    ) -> Result<OptimumReport> {
        if !(beta > 0.0 && beta < 1.0) {
            return Err(Error::Contract(format!(
                "accuracy floor {beta} must lie in (0, 1)"
            )));
        }
        if !(rate_cap > 0.0 && rate_cap.is_finite()) {
            return Err(Error::Contract(format!(
                "rate cap {rate_cap} must be positive and finite"
            )));
        }
        check_grid("rate", rate_grid)?;
        check_grid("alpha", alpha_grid)?;
        for &a in alpha_grid {
            if a >= 1.0 {
                return Err(Error::Contract(format!(
                    "training fraction {a} must lie below 1"
                )));
            }
        }
        let rates: Vec<f64> = rate_grid.iter().copied().filter(|&r| r <= rate_cap).collect();
        if rates.is_empty() {
            return Err(Error::Contract(
                "rate cap excludes the whole rate grid".into(),
            ));
        }
        let floor = beta - FEASIBILITY_SLACK;

        // Exhaustive pass.
        let evals: Vec<RateEval> = rates
            .iter()
            .map(|&r| self.rate_eval(r))
            .collect::<Result<_>>()?;
        let mut incumbent: Option<(usize, usize, f64)> = None;
        for (ri, eval) in evals.iter().enumerate() {
            for (ai, &alpha) in alpha_grid.iter().enumerate() {
                if cached_accuracy(eval, alpha)? >= floor {
                    let u = (1.0 - alpha) * eval.t_min;
                    if incumbent.is_none_or(|(_, _, best)| u > best) {
                        incumbent = Some((ri, ai, u));
                    }
                }
            }
        }

        // Refinement pass around the incumbent: training fraction first,
        // then rate on a log scale, keeping the best point seen.
        let refined = match incumbent {
            None => None,
            Some((ri, ai, grid_u)) => {
                let eval = &evals[ri];
                let a_lo = alpha_grid[ai.saturating_sub(1)];
                let a_hi = alpha_grid[(ai + 1).min(alpha_grid.len() - 1)];
                let (alpha_ref, u_ref) = golden_max(
                    |alpha| {
                        Ok(if cached_accuracy(eval, alpha)? >= floor {
                            (1.0 - alpha) * eval.t_min
                        } else {
                            f64::NEG_INFINITY
                        })
                    },
                    a_lo,
                    a_hi,
                    48,
                )?;
                let (best_alpha, u_after_alpha) = if u_ref > grid_u {
                    (alpha_ref, u_ref)
                } else {
                    (alpha_grid[ai], grid_u)
                };
                let r_lo = rates[ri.saturating_sub(1)].ln();
                let r_hi = rates[(ri + 1).min(rates.len() - 1)].ln();
                let (log_rate, u_rate) = golden_max(
                    |log_rate| {
                        let eval = self.rate_eval(log_rate.exp())?;
                        Ok(if cached_accuracy(&eval, best_alpha)? >= floor {
                            (1.0 - best_alpha) * eval.t_min
                        } else {
                            f64::NEG_INFINITY
                        })
                    },
                    r_lo,
                    r_hi,
                    48,
                )?;
                let (best_rate, best_u) = if u_rate > u_after_alpha {
                    (log_rate.exp(), u_rate)
                } else {
                    (rates[ri], u_after_alpha)
                };
                Some((best_alpha, best_rate, best_u, ri == rates.len() - 1))
            }
        };

        // The infinite-rate candidate: limiting accuracy grows with the
        // training fraction, so the best limit point is the smallest
        // fraction in the grid span that stays feasible.
        let limit_candidate = {
            let a_lo = alpha_grid[0];
            let a_hi = *alpha_grid.last().expect("grid checked nonempty");
            if self.limit_at_infinite_rate(a_hi)?.accuracy >= floor {
                let alpha = if self.limit_at_infinite_rate(a_lo)?.accuracy >= floor {
                    a_lo
                } else {
                    let mut lo = a_lo;
                    let mut hi = a_hi;
                    for _ in 0..60 {
                        let mid = 0.5 * (lo + hi);
                        if self.limit_at_infinite_rate(mid)?.accuracy >= floor {
                            hi = mid;
                        } else {
                            lo = mid;
                        }
                    }
                    hi
                };
                let limit = self.limit_at_infinite_rate(alpha)?;
                Some((alpha, limit.u, limit.accuracy))
            } else {
                None
            }
        };

        Ok(match (refined, limit_candidate) {
            (Some((_, _, u, at_top)), Some((l_alpha, l_u, l_acc))) if at_top && l_u > u => {
                OptimumReport {
                    beta,
                    feasible: true,
                    alpha_star: l_alpha,
                    rate_star: Some(RateStar::Unbounded),
                    u_star: l_u,
                    accuracy: l_acc,
                }
            }
            (Some((alpha, rate, u, _)), _) => {
                let accuracy = cached_accuracy(&self.rate_eval(rate)?, alpha)?;
                OptimumReport {
                    beta,
                    feasible: true,
                    alpha_star: alpha,
                    rate_star: Some(RateStar::Finite(rate)),
                    u_star: u,
                    accuracy,
                }
            }
            (None, Some((l_alpha, l_u, l_acc))) => OptimumReport {
                beta,
                feasible: true,
                alpha_star: l_alpha,
                rate_star: Some(RateStar::Unbounded),
                u_star: l_u,
                accuracy: l_acc,
            },
            (None, None) => OptimumReport::infeasible(beta),
        })
    }
}

// ============================================================================
// Threshold scan
// ============================================================================

/// Optimization outcomes across accuracy floors.
#[derive(Debug, Clone)]
pub struct ThresholdScan {
    /// One report per requested floor, in input order.
    pub reports: Vec<OptimumReport>,
    /// Floor at which the maximizing rate stops being finite, located to
    /// within 1e-3 between the bracketing scan points; `None` when the scan
    /// never crosses.
    pub transition: Option<f64>,
}

impl Scenario {
    /// Runs [`Scenario::optimize`] across an ascending floor grid and
    /// locates the finite-to-unbounded transition by bisection.
    pub fn threshold_scan(
        &self,
        beta_grid: &[f64],
        alpha_grid: &[f64],
        rate_grid: &[f64],
        rate_cap: f64,
    ) -> Result<ThresholdScan> {
        if beta_grid.is_empty() {
            return Err(Error::Contract("accuracy floor grid is empty".into()));
        }
        for &b in beta_grid {
            if !(b > 0.5 && b < 1.0) {
                return Err(Error::Contract(format!(
                    "accuracy floor {b} must lie in (0.5, 1)"
                )));
            }
        }
        if beta_grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Contract(
                "accuracy floor grid must be strictly increasing".into(),
            ));
        }
        let reports: Vec<OptimumReport> = beta_grid
            .iter()
            .map(|&b| self.optimize(b, alpha_grid, rate_grid, rate_cap))
            .collect::<Result<_>>()?;
        let is_unbounded =
            |r: &OptimumReport| matches!(r.rate_star, Some(RateStar::Unbounded));
        let is_finite = |r: &OptimumReport| matches!(r.rate_star, Some(RateStar::Finite(_)));
        let mut transition = None;
        for pair in reports.windows(2) {
            if is_finite(&pair[0]) && is_unbounded(&pair[1]) {
                let mut lo = pair[0].beta;
                let mut hi = pair[1].beta;
                while hi - lo > 1e-3 {
                    let mid = 0.5 * (lo + hi);
                    let probe = self.optimize(mid, alpha_grid, rate_grid, rate_cap)?;
                    if is_unbounded(&probe) {
                        hi = mid;
                    } else {
                        lo = mid;
                    }
                }
                transition = Some(0.5 * (lo + hi));
                break;
            }
        }
        Ok(ThresholdScan {
            reports,
            transition,
        })
    }
}

// ============================================================================
// Tests
// ============================================================================
