//! Battery lifetime and classification accuracy analysis for wireless sensor
//! networks coordinated by CSMA random access.
//!
//! A network of battery-powered sensors observes a Gaussian field once per
//! unit time and ships measurements over a shared wireless channel. Carrier
//! sensing keeps conflicting nodes from transmitting simultaneously, so at any
//! instant the set of transmitting nodes is an independent set of a conflict
//! graph, and under exponential back-off the active set evolves as a
//! reversible Markov chain with a product-form stationary law. Higher back-off
//! rates raise throughput and drain batteries faster; they also reshape how
//! often each activity pattern occurs, which sets how many training samples
//! the pattern's classifier collects before the network switches from
//! training to operation. This crate quantifies both sides of that coin and
//! the constrained optimum between them.
//!
//! # Modules
//!
//! * [`topology`] - sensor layouts, nearest-neighbor conflict graphs, and
//!   enumeration of independent activity patterns.
//! * [`gmrf`] - the Gauss-Markov measurement model over the sensing forest
//!   and Mahalanobis separations of its marginals.
//! * [`csma`] - product-form stationary analysis: throughput, battery
//!   lifetime, and expected training-sample allocation.
//! * [`accuracy`] - finite-sample classification accuracy via an expected
//!   generalization approximation, aggregated across activity patterns.
//! * [`simulate`] - event-driven simulation oracles for the analytic claims:
//!   chain occupancy, Monte Carlo classifier training, and full
//!   train-then-operate replications.
//! * [`tradeoff`] - back-off rate sweeps, lifetime-accuracy frontiers, the
//!   infinite-rate limit, and lifetime maximization under an accuracy floor.
//! * [`cli`] - the `stl` command line driving all of the above and writing
//!   CSV/JSON artifacts.
//!
//! # Runnable examples
//!
//! Each major capability has a runnable example under `examples/`:
//!
//! ```text
//! cargo run --example nn_topology        # layouts, conflict graphs, pattern enumeration
//! cargo run --example measurement_model  # covariance construction and separations
//! cargo run --example csma_stationary    # product-form law, throughput, lifetimes
//! cargo run --example raudys_curves      # finite-sample accuracy and overfitting
//! cargo run --example ctmc_occupancy     # simulated occupancy against the analytic law
//! cargo run --example fda_monte_carlo    # trained-classifier accuracy against the approximation
//! cargo run --example sweep_figure_data  # per-rate sweep tables
//! cargo run --example lifetime_frontier  # lifetime-accuracy frontier and envelope
//! cargo run --example optimize_target    # constrained lifetime maximization
//! cargo run --example end_to_end         # full train-then-operate replication
//! ```

use std::fmt;

pub mod accuracy;
pub mod cli;
pub mod csma;
pub mod gmrf;
pub mod simulate;
pub mod topology;
pub mod tradeoff;

/// Crate-wide error type.
///
/// Degenerate classifier training is not an `Error`: it is an expected
/// outcome in the small-sample regime and is signalled separately by
/// [`simulate::TrainFailure`], which callers score as accuracy 1/2.
#[derive(Debug)]
pub enum Error {
    /// A sensor layout failed validation (coordinates, ids, duplicates).
    InvalidLayout(String),
    /// Exhaustive enumeration was asked for more nodes than the cap allows.
    Capacity { nodes: usize, cap: usize },
    /// An argument violated a documented precondition.
    Contract(String),
    /// A graph lacked the structure an algorithm requires (e.g. not a forest).
    UnsupportedStructure(String),
    /// Measurement-model construction or evaluation failed numerically.
    Model(String),
    /// Invalid run configuration (flags, config file, grids).
    Config(String),
    /// An underlying file or stream operation failed.
    Io(std::io::Error),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidLayout(msg) => write!(f, "invalid layout: {msg}"),
            Error::Capacity { nodes, cap } => write!(
                f,
                "enumeration over {nodes} nodes exceeds the cap of {cap}"
            ),
            Error::Contract(msg) => write!(f, "contract violation: {msg}"),
            Error::UnsupportedStructure(msg) => write!(f, "unsupported structure: {msg}"),
            Error::Model(msg) => write!(f, "measurement model: {msg}"),
            Error::Config(msg) => write!(f, "configuration: {msg}"),
            Error::Io(err) => write!(f, "i/o: {err}"),
        }
    }
}

impl std::error::Error for Error {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            Error::Io(err) => Some(err),
            _ => None,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(err: std::io::Error) -> Self {
        Error::Io(err)
    }
}

pub type Result<T> = std::result::Result<T, Error>;
