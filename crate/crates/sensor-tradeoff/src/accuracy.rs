//! Expected classification accuracy of sample-trained linear classifiers.
//!
//! Each activity pattern gets a Fisher linear discriminant trained on the
//! samples collected while that pattern (or its pooled class) was active.
//! The expected generalization accuracy of such a classifier, over the
//! randomness of the training set, follows the Raudys small-sample formula:
//! it depends only on the class separation, the active dimension, and the
//! number of training samples, degrades to chance when samples do not exceed
//! dimension, and climbs to the Bayes accuracy as samples grow.

use crate::csma::{
    chain3_closed_forms, indep_closed_forms, CsmaAnalysis, EnergyBudget, SampleGrouping,
};
use crate::gmrf::MeasurementModel;
use crate::{Error, Result};

// ============================================================================
// Scalar accuracy formulas
// ============================================================================

/// Standard normal cumulative distribution function.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

/// Accuracy of the optimal (true-parameter) classifier for separation
/// `delta_sq` between the class means.
pub fn bayes_accuracy(delta_sq: f64) -> Result<f64> {
    if !(delta_sq >= 0.0 && delta_sq.is_finite()) {
        return Err(Error::Contract(format!(
            "separation {delta_sq} must be nonnegative and finite"
        )));
    }
    Ok(normal_cdf(delta_sq.sqrt() / 2.0))
}

/// Expected accuracy of a Fisher discriminant trained on `samples` labelled
/// observations in `n_active` dimensions with class separation `delta_sq`.
///
/// Chance level 0.5 is returned exactly when nothing can be learned: no
/// active dimension, zero separation, or a sample count that does not exceed
/// the dimension.
pub fn raudys_accuracy(delta_sq: f64, n_active: usize, samples: f64) -> Result<f64> {
    if !(delta_sq >= 0.0 && delta_sq.is_finite()) {
        return Err(Error::Contract(format!(
            "separation {delta_sq} must be nonnegative and finite"
        )));
    }
    if !(samples >= 0.0) || samples.is_nan() {
        return Err(Error::Contract(format!(
            "sample count {samples} must be nonnegative"
        )));
    }
    let n = n_active as f64;
    if n_active == 0 || delta_sq == 0.0 || samples <= n {
        return Ok(0.5);
    }
    let inflation = (1.0 + 4.0 * n / (samples * delta_sq)) * samples / (samples - n);
    Ok(normal_cdf(0.5 * delta_sq.sqrt() / inflation.sqrt()))
}

// ============================================================================
// Pattern-weighted accuracy
// ============================================================================

/// One trained classifier: a single pattern, or the pooled patterns sharing
/// an active count.
#[derive(Debug, Clone)]
pub struct ClassifierClass {
    pub label: String,
    /// Number of patterns the class covers.
    pub member_count: usize,
    /// Active dimension of every member pattern.
    pub n_active: usize,
    /// Common separation of the member patterns.
    pub delta_sq: f64,
    /// Training samples available to this classifier.
    pub samples: f64,
    /// Stationary probability mass of the member patterns.
    pub probability: f64,
    /// Expected accuracy of this classifier.
    pub accuracy: f64,
}

/// Accuracy of each pattern's classifier and the stationary-weighted totals.
#[derive(Debug, Clone)]
pub struct AccuracyBreakdown {
    /// Expected trained accuracy per pattern, aligned with the analysis.
    pub per_state: Vec<f64>,
    /// Bayes accuracy per pattern.
    pub bayes_per_state: Vec<f64>,
    /// Stationary-weighted expected trained accuracy.
    pub total: f64,
    /// Stationary-weighted Bayes accuracy.
    pub bayes_total: f64,
    /// One entry per trained classifier.
    pub classes: Vec<ClassifierClass>,
}

/// Pattern-weighted accuracy with separations taken from the measurement
/// model.
pub fn state_weighted_accuracy(
    analysis: &CsmaAnalysis,
    model: &MeasurementModel,
    grouping: SampleGrouping,
) -> Result<AccuracyBreakdown> {
    let delta_sq: Vec<f64> = analysis
        .states
        .iter()
        .map(|s| model.mahalanobis_sq(s))
        .collect::<Result<_>>()?;
    state_weighted_accuracy_from_separations(analysis, &delta_sq, grouping)
}

/// Pattern-weighted accuracy from precomputed per-pattern separations.
///
/// Under `ByActiveCount` pooling every member of a class must carry the same
/// separation (1e-9 relative); pooling statistically distinct patterns into
/// one classifier is rejected rather than averaged.
pub fn state_weighted_accuracy_from_separations(
    analysis: &CsmaAnalysis,
    delta_sq: &[f64],
    grouping: SampleGrouping,
) -> Result<AccuracyBreakdown> {
    let states = &analysis.states;
    if delta_sq.len() != states.len() {
        return Err(Error::Contract(format!(
            "{} separations for {} patterns",
            delta_sq.len(),
            states.len()
        )));
    }

    // Class id per pattern plus the class roster.
    let (ids, mut classes): (Vec<usize>, Vec<ClassifierClass>) = match grouping {
        SampleGrouping::PerState => {
            let classes = states
                .iter()
                .enumerate()
                .map(|(i, s)| ClassifierClass {
                    label: s.label(),
                    member_count: 1,
                    n_active: s.active_count(),
                    delta_sq: delta_sq[i],
                    samples: analysis.samples[i],
                    probability: analysis.pi[i],
                    accuracy: 0.0,
                })
                .collect();
            ((0..states.len()).collect(), classes)
        }
        SampleGrouping::ByActiveCount => {
            let n = states[0].len();
            let mut classes: Vec<ClassifierClass> = (0..=n)
                .map(|k| ClassifierClass {
                    label: format!("k{k}"),
                    member_count: 0,
                    n_active: k,
                    delta_sq: f64::NAN,
                    samples: 0.0,
                    probability: 0.0,
                    accuracy: 0.0,
                })
                .collect();
            let mut ids = Vec::with_capacity(states.len());
            for (i, s) in states.iter().enumerate() {
                let k = s.active_count();
                let class = &mut classes[k];
                if class.member_count == 0 {
                    class.delta_sq = delta_sq[i];
                } else {
                    let scale = class.delta_sq.abs().max(delta_sq[i].abs()).max(1.0);
                    if (class.delta_sq - delta_sq[i]).abs() > 1e-9 * scale {
                        return Err(Error::Contract(format!(
                            "patterns {} and k{} pool into one classifier but their \
                             separations differ ({} vs {})",
                            s.label(),
                            k,
                            delta_sq[i],
                            class.delta_sq
                        )));
                    }
                }
                class.member_count += 1;
                class.samples += analysis.samples[i];
                class.probability += analysis.pi[i];
                ids.push(k);
            }
            classes.retain(|c| c.member_count > 0);
            // Remap ids onto the retained roster.
            let mut id_of_count = vec![usize::MAX; n + 1];
            for (ci, c) in classes.iter().enumerate() {
                id_of_count[c.n_active] = ci;
            }
            (ids.into_iter().map(|k| id_of_count[k]).collect(), classes)
        }
    };

    for c in classes.iter_mut() {
        c.accuracy = raudys_accuracy(c.delta_sq, c.n_active, c.samples)?;
    }

    let mut per_state = Vec::with_capacity(states.len());
    let mut bayes_per_state = Vec::with_capacity(states.len());
    let mut total = 0.0;
    let mut bayes_total = 0.0;
    for (i, s) in states.iter().enumerate() {
        let a = raudys_accuracy(delta_sq[i], s.active_count(), classes[ids[i]].samples)?;
        let b = bayes_accuracy(delta_sq[i])?;
        total += analysis.pi[i] * a;
        bayes_total += analysis.pi[i] * b;
        per_state.push(a);
        bayes_per_state.push(b);
    }

    Ok(AccuracyBreakdown {
        per_state,
        bayes_per_state,
        total,
        bayes_total,
        classes,
    })
}

// ============================================================================
// Symmetric closed-form totals
// ============================================================================

/// Stationary-weighted accuracy for `n` conflict-free sensors with
/// uncorrelated unit-mean-shift measurements, one shared back-off rate, and
/// per-count pooled training.
pub fn indep_total_accuracy(
    n: usize,
    nu: f64,
    alpha: f64,
    l: f64,
    sigma_sq: f64,
) -> Result<f64> {
    if !(sigma_sq > 0.0 && sigma_sq.is_finite()) {
        return Err(Error::Contract(format!(
            "noise variance {sigma_sq} must be positive and finite"
        )));
    }
    let budget = EnergyBudget::new(l, alpha)?;
    let c = indep_closed_forms(n, nu, &budget)?;
    let mut total = 0.0;
    for k in 0..=n {
        total += c.pi_class[k] * raudys_accuracy(k as f64 / sigma_sq, k, c.m_class[k])?;
    }
    Ok(total)
}

/// Stationary-weighted accuracy for the three-sensor chain preset with
/// adjacent-sensor correlation `g` and per-pattern training.
pub fn chain3_total_accuracy(
    eta: f64,
    alpha: f64,
    l: f64,
    sigma_sq: f64,
    g: f64,
) -> Result<f64> {
    if !(sigma_sq > 0.0 && sigma_sq.is_finite()) {
        return Err(Error::Contract(format!(
            "noise variance {sigma_sq} must be positive and finite"
        )));
    }
    if !(g > 0.0 && g < 1.0) {
        return Err(Error::Contract(format!(
            "adjacent correlation {g} must lie in (0, 1)"
        )));
    }
    let budget = EnergyBudget::new(l, alpha)?;
    let c = chain3_closed_forms(eta, &budget)?;
    let single = 1.0 / sigma_sq;
    // The two chain ends are two hops apart: correlation g^2, hence a
    // separation of 2 / (sigma^2 (1 + g^2)) for the pair pattern.
    let ends = 2.0 / (sigma_sq * (1.0 + g * g));
    let delta_sq = [0.0, single, single, single, ends];
    let dims = [0usize, 1, 1, 1, 2];
    let mut total = 0.0;
    for i in 0..5 {
        total += c.pi[i] * raudys_accuracy(delta_sq[i], dims[i], c.m[i])?;
    }
    Ok(total)
}

// ============================================================================
// Tests
// ============================================================================

#[cfg(test)]
mod tests {
    use super::*;
    use crate::csma::{BackoffConfig, LifetimePolicy, chain3_rates};
    use crate::gmrf::CorrelationDecay;
    use crate::topology::{enumerate_states, Graph, SensorLayout};
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    /// Composite-Simpson integral of the standard normal density from 0 to x,
    /// an oracle route into the distribution function that never touches erf.
    fn phi_oracle(x: f64) -> f64 {
        let ax = x.abs();
        let steps = 20_000usize;
        let h = ax / steps as f64;
        let pdf = |t: f64| (-0.5 * t * t).exp() / (2.0 * std::f64::consts::PI).sqrt();
        let mut sum = pdf(0.0) + pdf(ax);
        for i in 1..steps {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            sum += w * pdf(i as f64 * h);
        }
        let integral = sum * h / 3.0;
        if x >= 0.0 {
            0.5 + integral
        } else {
            0.5 - integral
        }
    }

    #[test]
    fn normal_cdf_matches_quadrature() {
        let mut x = -8.0;
        while x <= 8.0 {
            assert!(
                (normal_cdf(x) - phi_oracle(x)).abs() <= 1e-13,
                "x = {x}: {} vs {}",
                normal_cdf(x),
                phi_oracle(x)
            );
            x += 0.25;
        }
        assert!((normal_cdf(1.0) - 0.8413447460685429).abs() < 1e-15);
        assert_relative_eq!(normal_cdf(0.0), 0.5, max_relative = 1e-15);
        for x in [-3.7, -0.2, 0.9, 2.4] {
            assert!((normal_cdf(x) + normal_cdf(-x) - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn raudys_small_sample_values() {
        // delta^2 = 4, 4 dimensions, 20 samples: the inflation factor is
        // (1 + 16/80) * 20/16 = 1.5, so accuracy is Phi(1 / sqrt(1.5)).
        let a = raudys_accuracy(4.0, 4, 20.0).unwrap();
        assert_relative_eq!(a, normal_cdf(1.0 / 1.5f64.sqrt()), max_relative = 1e-15);
        assert!((a - 0.79289).abs() < 1e-5);

        let b = raudys_accuracy(2.0, 2, 10.0).unwrap();
        assert_relative_eq!(
            b,
            normal_cdf((2.0f64 / 7.0).sqrt()),
            max_relative = 1e-13
        );
        assert!((b - 0.70350).abs() < 5e-5);
    }

    #[test]
    fn raudys_reaches_bayes_in_the_large_sample_limit() {
        let bayes = bayes_accuracy(4.0).unwrap();
        assert_relative_eq!(bayes, normal_cdf(1.0), max_relative = 1e-15);
        assert!((raudys_accuracy(4.0, 4, 1e12).unwrap() - bayes).abs() < 1e-10);
        let closer = raudys_accuracy(4.0, 4, 1e6).unwrap();
        let close = raudys_accuracy(4.0, 4, 1e3).unwrap();
        assert!(close < closer && closer < bayes);
    }

    #[test]
    fn chance_level_is_exact() {
        assert_eq!(raudys_accuracy(4.0, 4, 4.0).unwrap(), 0.5);
        assert_eq!(raudys_accuracy(4.0, 4, 3.2).unwrap(), 0.5);
        assert_eq!(raudys_accuracy(4.0, 4, 0.0).unwrap(), 0.5);
        assert_eq!(raudys_accuracy(4.0, 0, 50.0).unwrap(), 0.5);
        assert_eq!(raudys_accuracy(0.0, 4, 50.0).unwrap(), 0.5);
        assert_eq!(bayes_accuracy(0.0).unwrap(), 0.5);
    }

    #[test]
    fn accuracy_is_continuous_at_the_chance_threshold() {
        // Just past samples = dimension the accuracy leaves 0.5 smoothly.
        let near = raudys_accuracy(4.0, 4, 4.0 + 1e-3).unwrap();
        assert!(near > 0.5 && near < 0.51);
        let nearer = raudys_accuracy(4.0, 4, 4.0 + 1e-6).unwrap();
        assert!(nearer > 0.5 && nearer < 0.5005);
        assert!(nearer < near);
    }

    #[test]
    fn rejects_invalid_inputs() {
        assert!(raudys_accuracy(-1.0, 2, 10.0).is_err());
        assert!(raudys_accuracy(f64::NAN, 2, 10.0).is_err());
        assert!(raudys_accuracy(f64::INFINITY, 2, 10.0).is_err());
        assert!(raudys_accuracy(1.0, 2, -3.0).is_err());
        assert!(raudys_accuracy(1.0, 2, f64::NAN).is_err());
        assert!(bayes_accuracy(-0.5).is_err());
    }

    #[test]
    fn fixed_budget_accuracy_peaks_at_half_the_samples() {
        // With separation delta^2 = k in k dimensions and a fixed sample
        // budget m the accuracy is Phi(sqrt(k (m - k) / (m + 4)) / 2),
        // maximized at k = m / 2.
        for (m, peak) in [(20.0, 10usize), (50.0, 25), (100.0, 50)] {
            let mut best_k = 0;
            let mut best = f64::MIN;
            for k in 0..=(m as usize) {
                let a = raudys_accuracy(k as f64, k, m).unwrap();
                if a > best {
                    best = a;
                    best_k = k;
                }
            }
            assert_eq!(best_k, peak, "budget {m}");
        }
    }

    fn indep_breakdown(
        n: usize,
        nu: f64,
        alpha: f64,
        l: f64,
        sigma_sq: f64,
    ) -> AccuracyBreakdown {
        let states = enumerate_states(&Graph::edgeless(n)).unwrap();
        let backoff = BackoffConfig::uniform(n, nu).unwrap();
        let budget = EnergyBudget::new(l, alpha).unwrap();
        let analysis =
            CsmaAnalysis::compute(states, &backoff, &budget, LifetimePolicy::RequireEqual)
                .unwrap();
        let model = MeasurementModel::iid(n, sigma_sq).unwrap();
        state_weighted_accuracy(&analysis, &model, SampleGrouping::ByActiveCount).unwrap()
    }

    #[test]
    fn independent_total_matches_closed_form() {
        for nu in [0.3, 1.0, 3.0] {
            for alpha in [0.1, 0.2, 0.5] {
                let b = indep_breakdown(8, nu, alpha, 100.0, 1.0);
                let closed = indep_total_accuracy(8, nu, alpha, 100.0, 1.0).unwrap();
                assert_relative_eq!(b.total, closed, max_relative = 1e-12);
            }
        }
        let frozen = indep_total_accuracy(8, 1.0, 0.2, 100.0, 1.0).unwrap();
        assert!((frozen - 0.68424).abs() < 5e-4, "got {frozen}");
    }

    #[test]
    fn independent_pooling_has_nine_classes() {
        let b = indep_breakdown(8, 1.0, 0.2, 100.0, 1.0);
        assert_eq!(b.classes.len(), 9);
        assert_eq!(b.classes[0].label, "k0");
        assert_eq!(b.classes[8].label, "k8");
        assert_eq!(b.classes[3].member_count, 56);
        assert_relative_eq!(b.classes[3].samples, 8.75, max_relative = 1e-12);
        let mass: f64 = b.classes.iter().map(|c| c.probability).sum();
        assert_relative_eq!(mass, 1.0, max_relative = 1e-12);
        // Sparse per-pattern training would leave every pattern below its
        // two-sample floor here; pooling is what lifts accuracy off chance.
        assert!(b.total > 0.6);
    }

    fn chain3_breakdown(eta: f64, alpha: f64, l: f64, g: f64) -> AccuracyBreakdown {
        let layout = SensorLayout::line(3).unwrap();
        let forest = Graph::new(3, &[(0, 1), (1, 2)]).unwrap();
        let model = MeasurementModel::build(
            &layout,
            &forest,
            1.0,
            &CorrelationDecay::constant(g).unwrap(),
        )
        .unwrap();
        let states = enumerate_states(&forest).unwrap();
        let backoff = BackoffConfig::new(chain3_rates(eta).to_vec()).unwrap();
        let budget = EnergyBudget::new(l, alpha).unwrap();
        let analysis =
            CsmaAnalysis::compute(states, &backoff, &budget, LifetimePolicy::RequireEqual)
                .unwrap();
        state_weighted_accuracy(&analysis, &model, SampleGrouping::PerState).unwrap()
    }

    #[test]
    fn chain_total_matches_closed_form() {
        for eta in [0.4, 1.0, 2.7] {
            for g in [0.1, 0.25, 0.6] {
                let b = chain3_breakdown(eta, 0.4, 10.0, g);
                let closed = chain3_total_accuracy(eta, 0.4, 10.0, 1.0, g).unwrap();
                assert_relative_eq!(b.total, closed, max_relative = 1e-12);
            }
        }
        let frozen = chain3_total_accuracy(1.0, 0.4, 10.0, 1.0, 0.25).unwrap();
        assert!((frozen - 0.56705).abs() < 5e-4, "got {frozen}");
    }

    #[test]
    fn chain_pair_pattern_sits_at_chance() {
        // At eta = 1, alpha = 0.4, l = 10 the two-end pattern trains on two
        // samples in two dimensions, which cannot beat chance.
        let b = chain3_breakdown(1.0, 0.4, 10.0, 0.25);
        assert_eq!(b.classes.len(), 5);
        assert_eq!(b.classes[4].label, "n1+n3");
        assert_eq!(b.per_state[4], 0.5);
        assert!(b.per_state[2] > b.per_state[1]);
        assert!(b.bayes_per_state[4] > b.bayes_per_state[1]);
        assert!(b.bayes_total > b.total);
    }

    #[test]
    fn pooling_distinct_separations_is_rejected() {
        // Three conflict-free sensors on a line with correlated measurements:
        // the two-active patterns differ in separation (adjacent vs two hops
        // apart), so pooling them by count must fail.
        let layout = SensorLayout::line(3).unwrap();
        let forest = Graph::new(3, &[(0, 1), (1, 2)]).unwrap();
        let model = MeasurementModel::build(
            &layout,
            &forest,
            1.0,
            &CorrelationDecay::constant(0.25).unwrap(),
        )
        .unwrap();
        let states = enumerate_states(&Graph::edgeless(3)).unwrap();
        let backoff = BackoffConfig::uniform(3, 1.0).unwrap();
        let budget = EnergyBudget::new(10.0, 0.4).unwrap();
        let analysis =
            CsmaAnalysis::compute(states, &backoff, &budget, LifetimePolicy::RequireEqual)
                .unwrap();
        let pooled = state_weighted_accuracy(&analysis, &model, SampleGrouping::ByActiveCount);
        assert!(matches!(pooled, Err(Error::Contract(_))));
        // Per-pattern training accepts the same configuration.
        assert!(state_weighted_accuracy(&analysis, &model, SampleGrouping::PerState).is_ok());
    }

    proptest! {
        /// Trained accuracy lies between chance and Bayes.
        #[test]
        fn trained_accuracy_is_bracketed(
            delta_sq in 0.0f64..30.0,
            n in 0usize..12,
            samples in 0.0f64..500.0
        ) {
            let a = raudys_accuracy(delta_sq, n, samples).unwrap();
            let b = bayes_accuracy(delta_sq).unwrap();
            prop_assert!(a >= 0.5);
            prop_assert!(a <= b + 1e-15);
        }

        /// More samples never hurt.
        #[test]
        fn accuracy_is_monotone_in_samples(
            delta_sq in 0.1f64..30.0,
            n in 1usize..12,
            m1 in 0.0f64..1000.0,
            factor in 1.01f64..10.0
        ) {
            let m2 = m1 * factor + 0.5;
            let a1 = raudys_accuracy(delta_sq, n, m1).unwrap();
            let a2 = raudys_accuracy(delta_sq, n, m2).unwrap();
            prop_assert!(a2 >= a1);
            if m1 > n as f64 + 0.01 {
                prop_assert!(a2 > a1);
            }
        }
    }
}
