//! Classic Frank-Wolfe for the social optimum, with exact line search.
//!
//! Both supported objectives have the form `sum_e a_e x_e + k b_e x_e^5`
//! (`k = 1` for the deterministic social cost, `k = E[(1 + beta u)^5]` for
//! the expected cost under multiplicative uniform noise). Along a segment
//! `x + gamma (y - x)` the objective is a convex quintic in `gamma`, so the
//! step is found by bisection on its increasing derivative.

use crate::cost_model::{
    check_spread, quintic_factor, scaled_social_cost, CostParams, GradientVector,
};
use crate::error::{Error, Result};
use crate::network::{FlowVector, Network};
use crate::scalar::{dot, Scalar};
use crate::shortest_path::aon_flow;
use crate::trace::{max_relative_change, SolverTrace, TraceRecord, TraceSink};

/// Flows below this are excluded from the relative-change computation.
pub const REL_CHANGE_FLOOR: f64 = 1e-12;

const LINE_SEARCH_MAX_ITERS: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Objective<T> {
    /// `sum_e f_e (a_e + b_e f_e^4)`.
    Deterministic,
    /// Expected social cost with `f_e = x_e (1 + beta u_e)`, `u_e ~ U[-1, 1]`.
    ExpectedCase1 { beta: T },
}

impl<T: Scalar> Objective<T> {
    fn quintic(&self) -> T {
        match *self {
            Objective::Deterministic => T::one(),
            Objective::ExpectedCase1 { beta } => quintic_factor(beta),
        }
    }

    pub fn value(&self, x: &[T], params: &CostParams<T>) -> T {
        scaled_social_cost(x, params, self.quintic())
    }

    pub fn gradient(&self, x: &[T], params: &CostParams<T>) -> GradientVector<T> {
        let k = T::lit(5.0) * self.quintic();
        GradientVector(
            x.iter()
                .zip(params.a.iter().zip(&params.b))
                .map(|(&x, (&a, &b))| a + k * b * x.powi(4))
                .collect(),
        )
    }

    /// Directional derivative at `x + gamma d` along `d`.
    fn slope(&self, x: &[T], d: &[T], gamma: T, params: &CostParams<T>) -> T {
        let k = T::lit(5.0) * self.quintic();
        x.iter()
            .zip(d)
            .zip(params.a.iter().zip(&params.b))
            .map(|((&x, &d), (&a, &b))| d * (a + k * b * (x + gamma * d).powi(4)))
            .sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FwConfig<T> {
    pub max_iters: usize,
    /// Stop when the largest relative edge-flow change falls below this.
    pub rel_change_tol: T,
    /// Bisection stops once the bracket on the step is narrower than this.
    pub line_search_tol: T,
    /// Stop when the duality gap falls below `gap_tol * objective`.
    pub gap_tol: T,
    /// Flow snapshot interval in the trace; 0 disables snapshots.
    pub snapshot_every: usize,
}

impl<T: Scalar> Default for FwConfig<T> {
    fn default() -> Self {
        Self {
            max_iters: 10_000,
            rel_change_tol: T::lit(1e-6),
            line_search_tol: T::lit(1e-12),
            gap_tol: T::lit(1e-8),
            snapshot_every: 100,
        }
    }
}

impl<T: Scalar> FwConfig<T> {
    pub fn validate(&self) -> Result<()> {
        if self.max_iters == 0 {
            return Err(Error::InvalidConfig("max_iters must be at least 1".into()));
        }
        for (name, v) in [
            ("rel_change_tol", self.rel_change_tol),
            ("line_search_tol", self.line_search_tol),
            ("gap_tol", self.gap_tol),
        ] {
            if !(v > T::zero()) {
                return Err(Error::InvalidConfig(format!("{name} must be positive")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FwOutcome<T> {
    pub flow: FlowVector<T>,
    pub objective: T,
    /// Duality gap at the returned flow.
    pub gap: T,
    pub iterations: usize,
    /// False when the iteration budget ran out first.
    pub converged: bool,
    pub trace: SolverTrace<T>,
}

/// Exact minimizer of `objective` on the segment `x + gamma (y - x)`,
/// `gamma in [0, 1]`.
pub fn line_search<T: Scalar>(
    x: &[T],
    y: &[T],
    params: &CostParams<T>,
    objective: Objective<T>,
    tol: T,
) -> T {
    let d: Vec<T> = y.iter().zip(x).map(|(&y, &x)| y - x).collect();
    if objective.slope(x, &d, T::zero(), params) >= T::zero() {
        return T::zero();
    }
    if objective.slope(x, &d, T::one(), params) <= T::zero() {
        return T::one();
    }
    let (mut lo, mut hi) = (T::zero(), T::one());
    let half = T::lit(0.5);
    for _ in 0..LINE_SEARCH_MAX_ITERS {
        if hi - lo <= tol {
            break;
        }
        let mid = (lo + hi) * half;
        if objective.slope(x, &d, mid, params) > T::zero() {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    (lo + hi) * half
}

/// Frank-Wolfe gap `grad(x) . (x - y)` with `y` the all-or-nothing vertex
/// for `grad(x)`. Upper-bounds `objective(x) - optimum`.
pub fn duality_gap<T: Scalar>(
    network: &Network<T>,
    params: &CostParams<T>,
    objective: Objective<T>,
    x: &[T],
) -> Result<T> {
    network.check_dim(x.len())?;
    let g = objective.gradient(x, params);
    let y = aon_flow(network, &g)?;
    Ok(gap_at(&g, x, &y))
}

fn gap_at<T: Scalar>(g: &[T], x: &[T], y: &[T]) -> T {
    dot(g, x) - dot(g, y)
}

/// Minimizes the deterministic social cost.
pub fn solve_deterministic<T: Scalar>(
    network: &Network<T>,
    params: &CostParams<T>,
    config: &FwConfig<T>,
) -> Result<FwOutcome<T>> {
    solve(network, params, Objective::Deterministic, config)
}

/// Minimizes the closed-form expected social cost at spread `beta`.
pub fn solve_expected<T: Scalar>(
    network: &Network<T>,
    params: &CostParams<T>,
    beta: T,
    config: &FwConfig<T>,
) -> Result<FwOutcome<T>> {
    check_spread(beta)?;
    solve(network, params, Objective::ExpectedCase1 { beta }, config)
}

pub fn solve<T: Scalar>(
    network: &Network<T>,
    params: &CostParams<T>,
    objective: Objective<T>,
    config: &FwConfig<T>,
) -> Result<FwOutcome<T>> {
    let mut trace = SolverTrace::default();
    solve_with_sink(network, params, objective, config, &mut trace).map(|mut o| {
        o.trace = trace;
        o
    })
}

/// Runs the solver, streaming trace records into `sink`. The returned
/// outcome carries an empty trace.
pub fn solve_with_sink<T: Scalar, S: TraceSink<T>>(
    network: &Network<T>,
    params: &CostParams<T>,
    objective: Objective<T>,
    config: &FwConfig<T>,
    sink: &mut S,
) -> Result<FwOutcome<T>> {
    config.validate()?;
    network.check_dim(params.len())?;
    let eps = T::lit(REL_CHANGE_FLOOR);

    // Zero-flow marginal costs are the free-flow coefficients.
    let mut x = aon_flow(network, &params.a)?;
    let mut gap = T::infinity();
    let mut converged = false;
    let mut iterations = 0;

    while iterations < config.max_iters {
        let g = objective.gradient(&x, params);
        let y = aon_flow(network, &g)?;
        gap = gap_at(&g, &x, &y);
        if gap <= config.gap_tol * objective.value(&x, params) {
            converged = true;
            break;
        }
        let step = line_search(&x, &y, params, objective, config.line_search_tol);
        let next = x.toward(&y, step);
        let rel = max_relative_change(&x, &next, eps);
        sink.record(TraceRecord {
            iteration: iterations,
            max_rel_change: rel,
            cost: objective.value(&next, params),
            tracking_error: None,
            gap: Some(gap),
        });
        x = next;
        iterations += 1;
        if config.snapshot_every > 0 && iterations % config.snapshot_every == 0 {
            sink.snapshot(iterations, &x);
        }
        if rel < config.rel_change_tol {
            converged = true;
            gap = duality_gap(network, params, objective, &x)?;
            break;
        }
    }
    if !converged {
        gap = duality_gap(network, params, objective, &x)?;
    }
    Ok(FwOutcome {
        objective: objective.value(&x, params),
        flow: x,
        gap,
        iterations,
        converged,
        trace: SolverTrace::default(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cost_model::social_cost;
    use crate::network::{check_balance, parse_network};

    const FIG1: &str = include_str!("../../../examples/paper_fig1.net");

    fn setup() -> (Network<f64>, CostParams<f64>) {
        let n = parse_network(FIG1).unwrap();
        let p = CostParams::from_network(&n);
        (n, p)
    }

    #[test]
    fn deterministic_optimum_of_example() {
        let (n, p) = setup();
        let out = solve_deterministic(&n, &p, &FwConfig::default()).unwrap();
        assert!(out.converged);
        let want = [0.5238, 0.5238, 0.4762, 0.4762];
        assert!(out.flow.max_abs_diff(&want) <= 1e-3, "{:?}", out.flow);
        assert!(check_balance(&out.flow, &n, 1e-9).unwrap().passed);
        assert!(out.gap <= 1e-4 * out.objective);
    }

    #[test]
    fn expected_optimum_of_example() {
        let (n, p) = setup();
        let out = solve_expected(&n, &p, 1.0, &FwConfig::default()).unwrap();
        let want = [0.4206, 0.4206, 0.5794, 0.5794];
        assert!(out.flow.max_abs_diff(&want) <= 1e-3, "{:?}", out.flow);
        // Stationarity of the expected objective on the two-path network.
        let alpha = out.flow[0];
        let residual = 16.0 * alpha.powi(4) - (8.0 / 3.0) * (1.0 - alpha).powi(4) - 0.2;
        assert!(residual.abs() < 1e-3, "{residual}");
    }

    #[test]
    fn zero_spread_matches_deterministic() {
        let (n, p) = setup();
        let det = solve_deterministic(&n, &p, &FwConfig::default()).unwrap();
        let exp = solve_expected(&n, &p, 0.0, &FwConfig::default()).unwrap();
        assert!(det.flow.max_abs_diff(&exp.flow) <= 1e-9);
    }

    #[test]
    fn linear_costs_are_all_or_nothing() {
        let (n, p) = setup();
        let linear = p.scale_congestion(0.0);
        let out = solve_deterministic(&n, &linear, &FwConfig::default()).unwrap();
        assert_eq!(out.flow.as_slice(), &[1.0, 1.0, 0.0, 0.0]);
    }

    #[test]
    fn single_path_network_is_immediate() {
        let n: Network<f64> = "NODES A B C\nEDGE A B 1 2\nEDGE B C 1 2\nDEMAND A C 1.5\n"
            .parse()
            .unwrap();
        let p = CostParams::from_network(&n);
        let out = solve_deterministic(&n, &p, &FwConfig::default()).unwrap();
        assert_eq!(out.flow.as_slice(), &[1.5, 1.5]);
        assert!(out.iterations <= 1);
    }

    #[test]
    fn zero_demand_gives_zero_flow() {
        let n: Network<f64> = "NODES A B\nEDGE A B 1 1\n".parse().unwrap();
        let p = CostParams::from_network(&n);
        let out = solve_deterministic(&n, &p, &FwConfig::default()).unwrap();
        assert_eq!(out.flow.as_slice(), &[0.0]);
    }

    #[test]
    fn line_search_between_vertices() {
        let (_, p) = setup();
        let x = [1.0, 1.0, 0.0, 0.0];
        let y = [0.0, 0.0, 1.0, 1.0];
        let g = line_search(&x, &y, &p, Objective::Deterministic, 1e-12);
        assert!((g - 0.4762).abs() < 1e-4, "{g}");
        assert_eq!(
            line_search(&x, &x, &p, Objective::Deterministic, 1e-12),
            0.0
        );

        let phi = |t: f64| {
            let z: Vec<f64> = x.iter().zip(&y).map(|(a, b)| a + t * (b - a)).collect();
            social_cost(&z, &p).unwrap()
        };
        let best = phi(g);
        for i in 0..=20 {
            assert!(best <= phi(i as f64 / 20.0) + 1e-15);
        }
    }

    #[test]
    fn line_search_endpoints() {
        let (_, p) = setup();
        // Moving onto the cheap path entirely is optimal when congestion is absent.
        let linear = p.scale_congestion(0.0);
        let g = line_search(
            &[0.0, 0.0, 1.0, 1.0],
            &[1.0, 1.0, 0.0, 0.0],
            &linear,
            Objective::Deterministic,
            1e-12,
        );
        assert_eq!(g, 1.0);
        let g = line_search(
            &[1.0, 1.0, 0.0, 0.0],
            &[0.0, 0.0, 1.0, 1.0],
            &linear,
            Objective::Deterministic,
            1e-12,
        );
        assert_eq!(g, 0.0);
    }

    #[test]
    fn budget_exhaustion_is_flagged() {
        let (n, p) = setup();
        let cfg = FwConfig {
            max_iters: 1,
            gap_tol: 1e-300,
            rel_change_tol: 1e-300,
            ..FwConfig::default()
        };
        let out = solve_deterministic(&n, &p, &cfg).unwrap();
        assert!(!out.converged);
        assert_eq!(out.trace.len(), 1);
    }

    #[test]
    fn config_validation() {
        assert!(FwConfig::<f64> {
            max_iters: 0,
            ..FwConfig::default()
        }
        .validate()
        .is_err());
        assert!(FwConfig::<f64> {
            rel_change_tol: 0.0,
            ..FwConfig::default()
        }
        .validate()
        .is_err());
    }

    #[test]
    fn works_in_single_precision() {
        let n = parse_network::<f32>(FIG1).unwrap();
        let p = CostParams::from_network(&n);
        let cfg = FwConfig {
            line_search_tol: 1e-7,
            ..FwConfig::default()
        };
        let out = solve_deterministic(&n, &p, &cfg).unwrap();
        assert!(out.flow.max_abs_diff(&[0.5238, 0.5238, 0.4762, 0.4762]) <= 1e-3);
    }
}
