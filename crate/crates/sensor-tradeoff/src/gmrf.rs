//! Gauss-Markov measurement model over the sensing forest.
//!
//! Conditioned on the environment class, the joint measurement is Gaussian
//! with mean all-zeros (class 0) or all-ones (class 1) and a covariance that
//! is Markov with respect to the nearest-neighbor forest: every diagonal
//! entry is the noise variance, entries on forest edges follow a
//! distance-decay correlation, and entries between non-adjacent sensors are
//! the product of the edge correlations along the unique connecting path
//! (zero across forest components). On a forest this is exactly the
//! completion that makes the precision matrix vanish off the edges.
//!
//! The squared Mahalanobis separation of the class means under a pattern's
//! marginal covariance is the quantity that drives classification accuracy;
//! it never decreases when a sensor is added to the pattern, and it splits
//! additively across forest components.

use nalgebra::{DMatrix, DVector};

use crate::topology::{ActivityState, Graph, SensorLayout};
use crate::{Error, Result};

/// Relative eigenvalue floor under which a marginal covariance is treated as
/// singular (scaled by the noise variance).
pub const SINGULARITY_TOLERANCE: f64 = 1e-12;

/// Relative magnitude bound for precision entries off the forest edges.
pub const PRECISION_ZERO_TOLERANCE: f64 = 1e-9;

// ============================================================================
// Correlation decay
// ============================================================================

/// Edge correlation as a function of sensor distance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CorrelationDecay {
    /// Measurements are independent across sensors.
    Iid,
    /// Every forest edge carries the same correlation, regardless of length.
    Constant(f64),
    /// Correlation `exp(-d / scale)` for an edge of length `d`.
    Exponential { scale: f64 },
}

impl CorrelationDecay {
    /// Constant decay; the value must lie strictly inside (0, 1).
    pub fn constant(value: f64) -> Result<Self> {
        if !(value > 0.0 && value < 1.0) {
            return Err(Error::Model(format!(
                "constant correlation {value} outside (0, 1)"
            )));
        }
        Ok(CorrelationDecay::Constant(value))
    }

    /// Exponential decay with the given positive length scale.
    pub fn exponential(scale: f64) -> Result<Self> {
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(Error::Model(format!(
                "exponential decay scale {scale} must be positive and finite"
            )));
        }
        Ok(CorrelationDecay::Exponential { scale })
    }

    /// Correlation assigned to an edge of length `distance`.
    pub fn correlation(&self, distance: f64) -> f64 {
        match *self {
            CorrelationDecay::Iid => 0.0,
            CorrelationDecay::Constant(value) => value,
            CorrelationDecay::Exponential { scale } => (-distance / scale).exp(),
        }
    }
}

// ============================================================================
// Measurement model
// ============================================================================

/// Joint Gaussian measurement model for the two environment classes.
#[derive(Debug, Clone)]
pub struct MeasurementModel {
    mu0: DVector<f64>,
    mu1: DVector<f64>,
    sigma: DMatrix<f64>,
    precision: DMatrix<f64>,
    noise_var: f64,
}

impl MeasurementModel {
    /// Builds the model for a layout and its sensing forest.
    ///
    /// `forest` must be acyclic (path products are only well defined on a
    /// forest) and span the same sensors as `layout`; `noise_var` must be
    /// positive.
    pub fn build(
        layout: &SensorLayout,
        forest: &Graph,
        noise_var: f64,
        decay: &CorrelationDecay,
    ) -> Result<Self> {
        let n = layout.len();
        if forest.node_count() != n {
            return Err(Error::Contract(format!(
                "forest on {} nodes paired with a layout of {}",
                forest.node_count(),
                n
            )));
        }
        if !(noise_var > 0.0 && noise_var.is_finite()) {
            return Err(Error::Model(format!(
                "noise variance {noise_var} must be positive and finite"
            )));
        }
        if !forest.is_forest() {
            return Err(Error::UnsupportedStructure(
                "the sensing graph contains a cycle; correlations are defined by \
                 unique paths and need a forest"
                    .into(),
            ));
        }

        // Pairwise correlations: product of edge correlations along the unique
        // connecting path, zero across components.
        let mut adjacency: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        for &(a, b) in forest.edges() {
            let g = decay.correlation(layout.distance(a, b));
            adjacency[a].push((b, g));
            adjacency[b].push((a, g));
        }
        let mut corr = DMatrix::<f64>::zeros(n, n);
        for root in 0..n {
            corr[(root, root)] = 1.0;
            let mut queue = std::collections::VecDeque::from([root]);
            let mut seen = vec![false; n];
            seen[root] = true;
            while let Some(u) = queue.pop_front() {
                for &(v, g) in &adjacency[u] {
                    if !seen[v] {
                        seen[v] = true;
                        corr[(root, v)] = corr[(root, u)] * g;
                        queue.push_back(v);
                    }
                }
            }
        }

        let sigma = corr * noise_var;
        let chol = sigma.clone().cholesky().ok_or_else(|| {
            Error::Model("the constructed covariance is not positive definite".into())
        })?;
        let precision = chol.inverse();

        // The forest-Markov completion must leave the precision zero off the
        // edges; anything larger than round-off means the construction broke.
        let max_abs = precision.iter().fold(0.0f64, |m, &x| m.max(x.abs()));
        for i in 0..n {
            for j in (i + 1)..n {
                if !forest.has_edge(i, j) && precision[(i, j)].abs() > PRECISION_ZERO_TOLERANCE * max_abs {
                    return Err(Error::Model(format!(
                        "precision entry ({i}, {j}) = {} violates the Markov zero pattern",
                        precision[(i, j)]
                    )));
                }
            }
        }

        Ok(MeasurementModel {
            mu0: DVector::zeros(n),
            mu1: DVector::from_element(n, 1.0),
            sigma,
            precision,
            noise_var,
        })
    }

    /// Independent measurements: diagonal covariance regardless of geometry.
    pub fn iid(n: usize, noise_var: f64) -> Result<Self> {
        let layout = SensorLayout::line(n)?;
        MeasurementModel::build(&layout, &Graph::edgeless(n), noise_var, &CorrelationDecay::Iid)
    }

    pub fn len(&self) -> usize {
        self.mu0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mu0.is_empty()
    }

    /// Class-0 mean (all zeros).
    pub fn mu0(&self) -> &DVector<f64> {
        &self.mu0
    }

    /// Class-1 mean (all ones).
    pub fn mu1(&self) -> &DVector<f64> {
        &self.mu1
    }

    pub fn sigma(&self) -> &DMatrix<f64> {
        &self.sigma
    }

    pub fn precision(&self) -> &DMatrix<f64> {
        &self.precision
    }

    pub fn noise_var(&self) -> f64 {
        self.noise_var
    }

    fn check_state(&self, state: &ActivityState) -> Result<()> {
        if state.len() != self.len() {
            return Err(Error::Contract(format!(
                "pattern over {} nodes evaluated against a model on {}",
                state.len(),
                self.len()
            )));
        }
        Ok(())
    }

    /// Covariance of the measurements of the active sensors, in node order.
    pub fn marginal_covariance(&self, state: &ActivityState) -> Result<DMatrix<f64>> {
        self.check_state(state)?;
        let active = state.active_nodes();
        let k = active.len();
        Ok(DMatrix::from_fn(k, k, |r, c| {
            self.sigma[(active[r], active[c])]
        }))
    }

    /// Squared Mahalanobis separation of the class means restricted to the
    /// pattern's active sensors: `1' (Sigma_w)^-1 1`.
    ///
    /// The empty pattern separates nothing and returns 0. A marginal whose
    /// smallest eigenvalue falls below [`SINGULARITY_TOLERANCE`] times the
    /// noise variance is rejected as singular.
    pub fn mahalanobis_sq(&self, state: &ActivityState) -> Result<f64> {
        self.check_state(state)?;
        if state.is_empty() {
            return Ok(0.0);
        }
        let marginal = self.marginal_covariance(state)?;
        let min_eig = marginal
            .clone()
            .symmetric_eigen()
            .eigenvalues
            .iter()
            .fold(f64::INFINITY, |m, &x| m.min(x));
        if min_eig < SINGULARITY_TOLERANCE * self.noise_var {
            return Err(Error::Model(format!(
                "marginal covariance of pattern {} is singular (min eigenvalue {min_eig:e})",
                state.label()
            )));
        }
        let k = marginal.nrows();
        let chol = marginal
            .cholesky()
            .ok_or_else(|| Error::Model("marginal covariance is not positive definite".into()))?;
        let ones = DVector::from_element(k, 1.0);
        let solved = chol.solve(&ones);
        Ok(solved.sum())
    }
}

/// Closed-form separation of the all-active pattern on a forest:
/// `n / noise_var - (2 / noise_var) * sum over edges of g / (1 + g)`.
///
/// This route uses no matrix algebra at all, which makes it an independent
/// cross-check of [`MeasurementModel::mahalanobis_sq`].
pub fn mahalanobis_sq_closed_full(
    layout: &SensorLayout,
    forest: &Graph,
    noise_var: f64,
    decay: &CorrelationDecay,
) -> Result<f64> {
    if forest.node_count() != layout.len() {
        return Err(Error::Contract(format!(
            "forest on {} nodes paired with a layout of {}",
            forest.node_count(),
            layout.len()
        )));
    }
    if !forest.is_forest() {
        return Err(Error::UnsupportedStructure(
            "closed-form separation is defined on forests only".into(),
        ));
    }
    if !(noise_var > 0.0 && noise_var.is_finite()) {
        return Err(Error::Model(format!(
            "noise variance {noise_var} must be positive and finite"
        )));
    }
    let n = layout.len() as f64;
    let edge_sum: f64 = forest
        .edges()
        .iter()
        .map(|&(a, b)| {
            let g = decay.correlation(layout.distance(a, b));
            g / (1.0 + g)
        })
        .sum();
    Ok(n / noise_var - 2.0 / noise_var * edge_sum)
}

// ============================================================================
// Tests
// ============================================================================
