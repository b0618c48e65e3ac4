//! Per-iteration solver records shared by both solvers.

use crate::network::FlowVector;
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecord<T> {
    /// Zero-based iteration index.
    pub iteration: usize,
    /// Largest relative change of any edge flow during the iteration.
    pub max_rel_change: T,
    /// Stochastic solver: social cost at the sampled flow `x + z`.
    /// Deterministic solver: objective value after the step.
    pub cost: T,
    /// `||grad F(x_t) - d_t||^2` when a closed-form expected gradient exists.
    pub tracking_error: Option<T>,
    /// Frank-Wolfe duality gap at the iterate before the step (deterministic solver).
    pub gap: Option<T>,
}

/// Receives trace records from a single running solver.
pub trait TraceSink<T> {
    fn record(&mut self, record: TraceRecord<T>);

    fn snapshot(&mut self, _iteration: usize, _x: &FlowVector<T>) {}
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverTrace<T> {
    pub records: Vec<TraceRecord<T>>,
    /// `(iteration, x after that iteration)` every `snapshot_every` iterations.
    pub snapshots: Vec<(usize, FlowVector<T>)>,
}

impl<T> Default for SolverTrace<T> {
    fn default() -> Self {
        Self {
            records: Vec::new(),
            snapshots: Vec::new(),
        }
    }
}

impl<T: Scalar> SolverTrace<T> {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn max_rel_changes(&self) -> Vec<T> {
        self.records.iter().map(|r| r.max_rel_change).collect()
    }

    /// Tracking errors, or `None` if any record lacks one.
    pub fn tracking_errors(&self) -> Option<Vec<T>> {
        self.records.iter().map(|r| r.tracking_error).collect()
    }
}

impl<T: Scalar> TraceSink<T> for SolverTrace<T> {
    fn record(&mut self, record: TraceRecord<T>) {
        self.records.push(record);
    }

    fn snapshot(&mut self, iteration: usize, x: &FlowVector<T>) {
        self.snapshots.push((iteration, x.clone()));
    }
}

/// Mean of the first and of the last `window` values (shorter series use
/// what is available).
pub fn window_means<T: Scalar>(values: &[T], window: usize) -> Option<(T, T)> {
    if values.is_empty() || window == 0 {
        return None;
    }
    let w = window.min(values.len());
    let mean = |s: &[T]| s.iter().copied().sum::<T>() / T::from_count(s.len());
    Some((mean(&values[..w]), mean(&values[values.len() - w..])))
}

/// Means of consecutive non-overlapping windows.
pub fn windowed_means<T: Scalar>(values: &[T], window: usize) -> Vec<T> {
    values
        .chunks(window.max(1))
        .map(|c| c.iter().copied().sum::<T>() / T::from_count(c.len()))
        .collect()
}

/// Largest relative per-edge change `|new - old| / old`. Edges whose old
/// flow is below `eps` are excluded.
pub fn max_relative_change<T: Scalar>(old: &[T], new: &[T], eps: T) -> T {
    old.iter()
        .zip(new)
        .filter(|(&o, _)| o >= eps)
        .map(|(&o, &n)| (n - o).abs() / o)
        .fold(T::zero(), T::max)
}
