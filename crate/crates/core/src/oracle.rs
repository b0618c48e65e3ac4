//! Brute-force references used to certify the solvers on small networks.
//!
//! Nothing here calls into the solver or cost-model code paths: objectives are
//! evaluated from path flows directly, and expectations over the uniform
//! multiplier use 3-point Gauss-Legendre quadrature, which is exact for the
//! degree-5 polynomials involved.

use crate::error::{Error, Result};
use crate::network::{enumerate_paths, FlowVector, Network};
use crate::scalar::Scalar;
use crate::stochastic_env::{sample_noise, GeneratorState, NoiseModel};

/// Largest total number of free simplex coordinates the grid accepts.
pub const MAX_SIMPLEX_DIMS: usize = 6;
/// Default cap on evaluated grid points per pass.
pub const DEFAULT_GRID_CAP: u128 = 20_000_000;

const REFINE_ROUNDS: usize = 3;
const SHRINK: usize = 10;

/// Expectation of `g(u)` for `u ~ U[-1, 1]`, exact for polynomials of degree <= 5.
fn uniform_expectation<T: Scalar>(g: impl Fn(T) -> T) -> T {
    let node = T::lit((3.0f64 / 5.0).sqrt());
    let (w0, w1) = (T::lit(8.0 / 9.0), T::lit(5.0 / 9.0));
    T::lit(0.5) * (w0 * g(T::zero()) + w1 * (g(node) + g(-node)))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OracleObjective<T> {
    Deterministic,
    ExpectedCase1 { beta: T },
}

#[derive(Debug, Clone, PartialEq)]
pub struct OdPaths<T> {
    pub origin: usize,
    pub destination: usize,
    pub demand: T,
    pub paths: Vec<Vec<usize>>,
}

/// Social-optimum problem over path flows: per OD pair, nonnegative path
/// flows summing to the demand.
#[derive(Debug, Clone, PartialEq)]
pub struct PathSpaceProblem<T> {
    pub od: Vec<OdPaths<T>>,
    pub edge_count: usize,
    pub a: Vec<T>,
    pub b: Vec<T>,
    pub objective: OracleObjective<T>,
}

impl<T: Scalar> PathSpaceProblem<T> {
    pub fn from_network(
        network: &Network<T>,
        objective: OracleObjective<T>,
        path_cap: usize,
    ) -> Result<Self> {
        let od = network
            .demands()
            .iter()
            .map(|d| {
                Ok(OdPaths {
                    origin: d.origin,
                    destination: d.destination,
                    demand: d.rate,
                    paths: enumerate_paths(network, d.origin, d.destination, path_cap)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            od,
            edge_count: network.edge_count(),
            a: network.edges().iter().map(|e| e.a).collect(),
            b: network.edges().iter().map(|e| e.b).collect(),
            objective,
        })
    }

    /// Number of free coordinates across all path simplices.
    pub fn dims(&self) -> usize {
        self.od
            .iter()
            .map(|o| o.paths.len().saturating_sub(1))
            .sum()
    }

    /// Edge flows for per-OD path fractions (each row sums to 1).
    pub fn edge_flows(&self, fractions: &[Vec<T>]) -> Vec<T> {
        let mut flow = vec![T::zero(); self.edge_count];
        for (od, frac) in self.od.iter().zip(fractions) {
            for (path, &share) in od.paths.iter().zip(frac) {
                for &e in path {
                    flow[e] = flow[e] + share * od.demand;
                }
            }
        }
        flow
    }

    pub fn evaluate(&self, fractions: &[Vec<T>]) -> T {
        self.objective_at(&self.edge_flows(fractions))
    }

    /// Objective at aggregate edge flows.
    pub fn objective_at(&self, x: &[T]) -> T {
        x.iter()
            .zip(self.a.iter().zip(&self.b))
            .map(|(&x, (&a, &b))| {
                let link = |f: T| f * a + f * f * f * f * f * b;
                match self.objective {
                    OracleObjective::Deterministic => link(x),
                    OracleObjective::ExpectedCase1 { beta } => {
                        uniform_expectation(|u: T| link(x * (T::one() + beta * u)))
                    }
                }
            })
            .sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridResult<T> {
    /// Per-OD path flows (fraction times demand).
    pub path_flows: Vec<Vec<T>>,
    pub objective: T,
    pub flow: FlowVector<T>,
    pub evaluations: u128,
}

fn binomial(n: u128, k: u128) -> u128 {
    let k = k.min(n.saturating_sub(k));
    (0..k).fold(1u128, |acc, i| acc.saturating_mul(n - i) / (i + 1))
}

/// All ways to split `total` into `parts` nonnegative integers, in
/// lexicographic order.
fn compositions(total: usize, parts: usize) -> Vec<Vec<usize>> {
    if parts == 0 {
        return vec![Vec::new()];
    }
    if parts == 1 {
        return vec![vec![total]];
    }
    let mut out = Vec::new();
    for first in 0..=total {
        for mut rest in compositions(total - first, parts - 1) {
            rest.insert(0, first);
            out.push(rest);
        }
    }
    out
}

/// Steps the odometer `idx` (last position fastest); false once it wraps.
fn advance<B>(idx: &mut [usize], blocks: &[Vec<B>]) -> bool {
    for k in (0..idx.len()).rev() {
        idx[k] += 1;
        if idx[k] < blocks[k].len() {
            return true;
        }
        idx[k] = 0;
    }
    false
}

/// Exhaustive search over a product-of-simplices grid with `resolution`
/// steps per simplex edge, then three rounds of local refinement, each
/// shrinking the step tenfold.
pub fn grid_minimize<T: Scalar>(
    problem: &PathSpaceProblem<T>,
    resolution: usize,
    cap: u128,
) -> Result<GridResult<T>> {
    if resolution == 0 {
        return Err(Error::InvalidConfig("resolution must be at least 1".into()));
    }
    let dims = problem.dims();
    if dims > MAX_SIMPLEX_DIMS {
        return Err(Error::GridTooLarge {
            size: dims as u128,
            cap: MAX_SIMPLEX_DIMS as u128,
        });
    }
    let size = problem.od.iter().fold(1u128, |acc, od| {
        let m = od.paths.len().max(1) as u128;
        acc.saturating_mul(binomial(resolution as u128 + m - 1, m - 1))
    });
    if size > cap {
        return Err(Error::GridTooLarge { size, cap });
    }
    if problem.od.iter().any(|od| od.paths.is_empty()) {
        return Err(Error::WrongTopology("OD pair without a path".into()));
    }

    let res = T::from_count(resolution);
    let blocks: Vec<Vec<Vec<T>>> = problem
        .od
        .iter()
        .map(|od| {
            compositions(resolution, od.paths.len())
                .into_iter()
                .map(|c| c.into_iter().map(|k| T::from_count(k) / res).collect())
                .collect()
        })
        .collect();

    // Odometer over the cartesian product of per-OD compositions,
    // last block varying fastest (lexicographic order).
    let mut idx = vec![0usize; blocks.len()];
    let mut best: Option<(T, Vec<Vec<T>>)> = None;
    let mut evaluations = 0u128;
    loop {
        let point: Vec<Vec<T>> = idx
            .iter()
            .zip(&blocks)
            .map(|(&i, b)| b[i].clone())
            .collect();
        let value = problem.evaluate(&point);
        evaluations += 1;
        if best.as_ref().is_none_or(|(v, _)| value < *v) {
            best = Some((value, point));
        }
        if !advance(&mut idx, &blocks) {
            break;
        }
    }
    let (mut best_value, mut best_point) = best.expect("grid has at least one point");

    let mut step = T::one() / res;
    let shrink = T::from_count(SHRINK);
    for _ in 0..REFINE_ROUNDS {
        if dims == 0 {
            break;
        }
        step = step / shrink;
        let mut half_width = SHRINK;
        while ((2 * half_width + 1) as u128).pow(dims as u32) > cap && half_width > 1 {
            half_width -= 1;
        }
        let span = 2 * half_width + 1;
        let total = (span as u128).pow(dims as u32);
        let center = best_point.clone();
        for n in 0..total {
            let mut code = n;
            let mut candidate = center.clone();
            let mut feasible = true;
            for frac in candidate.iter_mut() {
                let free = frac.len() - 1;
                let mut moved = T::zero();
                for f in frac.iter_mut().take(free) {
                    let offset = (code % span as u128) as i64 - half_width as i64;
                    code /= span as u128;
                    let delta = T::lit(offset as f64) * step;
                    *f = *f + delta;
                    moved = moved + delta;
                    if *f < T::zero() {
                        feasible = false;
                    }
                }
                let last = frac[free] - moved;
                frac[free] = last;
                if last < T::zero() {
                    feasible = false;
                }
            }
            if !feasible {
                continue;
            }
            let value = problem.evaluate(&candidate);
            evaluations += 1;
            if value < best_value {
                best_value = value;
                best_point = candidate;
            }
        }
    }

    let flow = FlowVector::from_raw(
        problem
            .edge_flows(&best_point)
            .into_iter()
            .map(|f| f.max(T::zero()))
            .collect(),
    );
    let path_flows = best_point
        .iter()
        .zip(&problem.od)
        .map(|(frac, od)| frac.iter().map(|&s| s * od.demand).collect())
        .collect();
    Ok(GridResult {
        path_flows,
        objective: best_value,
        flow,
        evaluations,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate<T> {
    pub mean: T,
    pub std_error: T,
    pub samples: usize,
}

/// Running mean and variance (Welford).
#[derive(Debug, Clone, Copy, Default)]
pub struct Welford {
    n: u64,
    mean: f64,
    m2: f64,
}

impl Welford {
    pub fn push(&mut self, v: f64) {
        self.n += 1;
        let delta = v - self.mean;
        self.mean += delta / self.n as f64;
        self.m2 += delta * (v - self.mean);
    }

    pub fn count(&self) -> u64 {
        self.n
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Unbiased sample variance.
    pub fn variance(&self) -> f64 {
        if self.n < 2 {
            0.0
        } else {
            self.m2 / (self.n - 1) as f64
        }
    }

    pub fn std_error(&self) -> f64 {
        if self.n == 0 {
            0.0
        } else {
            (self.variance() / self.n as f64).sqrt()
        }
    }
}

/// Monte Carlo estimate of `E[sum_e f_e (a_e + b_e f_e^4)]` with `f = x + z`
/// (negative totals clamped to zero).
pub fn monte_carlo_expected_cost<T: Scalar>(
    x: &[T],
    a: &[T],
    b: &[T],
    noise: &NoiseModel<T>,
    n: usize,
    gen: &mut GeneratorState,
) -> Result<McEstimate<T>> {
    if n == 0 {
        return Err(Error::InvalidConfig(
            "sample count must be at least 1".into(),
        ));
    }
    noise.validate(x.len())?;
    let mut acc = Welford::default();
    for _ in 0..n {
        let z = sample_noise(x, &noise.kind, gen)?.z;
        let cost: T = x
            .iter()
            .zip(&z)
            .zip(a.iter().zip(b))
            .map(|((&x, &z), (&a, &b))| {
                let f = (x + z).max(T::zero());
                f * a + f * f * f * f * f * b
            })
            .sum();
        acc.push(cost.as_f64());
    }
    Ok(McEstimate {
        mean: T::lit(acc.mean()),
        std_error: T::lit(acc.std_error()),
        samples: n,
    })
}

/// Sample mean and variance of `f^r` for `f = x (1 + beta u)`, `u ~ U[-1, 1]`.
pub fn monte_carlo_flow_power(
    x: f64,
    beta: f64,
    r: i32,
    n: usize,
    gen: &mut GeneratorState,
) -> Welford {
    let mut acc = Welford::default();
    for _ in 0..n {
        let f = x * (1.0 + beta * gen.uniform_pm1());
        acc.push(f.powi(r));
    }
    acc
}

/// Absolute difference of the two path marginal costs of the expected
/// objective, for a network whose demand is a single OD pair with exactly two
/// simple paths. Zero at an interior optimum.
pub fn stationarity_residual<T: Scalar>(network: &Network<T>, x: &[T], beta: T) -> Result<T> {
    network.check_dim(x.len())?;
    let [d] = network.demands() else {
        return Err(Error::WrongTopology(format!(
            "expected one OD pair, found {}",
            network.demands().len()
        )));
    };
    let paths = enumerate_paths(network, d.origin, d.destination, 16)
        .map_err(|_| Error::WrongTopology("too many paths".into()))?;
    let [upper, lower] = &paths[..] else {
        return Err(Error::WrongTopology(format!(
            "expected two paths, found {}",
            paths.len()
        )));
    };
    let five = T::lit(5.0);
    let marginal = |e: usize| {
        let edge = network.edge(e);
        let xe = x[e];
        // d/dx E[f a + f^5 b] with f = x (1 + beta u).
        uniform_expectation(|u: T| {
            let s = T::one() + beta * u;
            edge.a * s + five * edge.b * xe * xe * xe * xe * s * s * s * s * s
        })
    };
    let cost = |p: &Vec<usize>| p.iter().map(|&e| marginal(e)).sum::<T>();
    Ok((cost(upper) - cost(lower)).abs())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::{parse_network, DEFAULT_PATH_CAP};

    const FIG1: &str = include_str!("../../../examples/paper_fig1.net");

    fn fig1() -> Network<f64> {
        parse_network(FIG1).unwrap()
    }

    /// The scalar two-path problem written out by hand.
    fn scalar_problem(alpha: f64) -> f64 {
        2.0 * alpha * (0.3 + 0.6 * alpha.powi(4))
            + 2.0 * (1.0 - alpha) * (0.5 + 0.1 * (1.0 - alpha).powi(4))
    }

    #[test]
    fn quadrature_is_exact_for_quintics() {
        // E[(1+u)^5] = 16/3, E[u^4] = 1/5.
        assert!((uniform_expectation(|u: f64| (1.0 + u).powi(5)) - 16.0 / 3.0).abs() < 1e-14);
        assert!((uniform_expectation(|u: f64| u.powi(4)) - 0.2).abs() < 1e-15);
    }

    #[test]
    fn objective_matches_scalar_problem() {
        let p = PathSpaceProblem::from_network(
            &fig1(),
            OracleObjective::Deterministic,
            DEFAULT_PATH_CAP,
        )
        .unwrap();
        for alpha in [0.0, 0.25, 0.5238, 1.0] {
            let v = p.evaluate(&[vec![alpha, 1.0 - alpha]]);
            assert!((v - scalar_problem(alpha)).abs() < 1e-14);
        }
    }

    #[test]
    fn deterministic_grid_optimum() {
        let p = PathSpaceProblem::from_network(
            &fig1(),
            OracleObjective::Deterministic,
            DEFAULT_PATH_CAP,
        )
        .unwrap();
        let r = grid_minimize(&p, 10_000, DEFAULT_GRID_CAP).unwrap();
        assert!((r.path_flows[0][0] - 0.5238).abs() <= 2e-4);
        assert!((r.objective - 0.8427).abs() <= 1e-4);
    }

    #[test]
    fn expected_grid_optimum() {
        let p = PathSpaceProblem::from_network(
            &fig1(),
            OracleObjective::ExpectedCase1 { beta: 1.0 },
            DEFAULT_PATH_CAP,
        )
        .unwrap();
        let r = grid_minimize(&p, 10, DEFAULT_GRID_CAP).unwrap();
        assert!(
            (r.path_flows[0][0] - 0.4206).abs() <= 2e-4,
            "{:?}",
            r.path_flows
        );
        assert_eq!(r.flow.len(), 4);
    }

    #[test]
    fn single_path_grid_has_one_point() {
        let n: Network<f64> = "NODES A B\nEDGE A B 1 1\nDEMAND A B 2\n".parse().unwrap();
        let p =
            PathSpaceProblem::from_network(&n, OracleObjective::Deterministic, DEFAULT_PATH_CAP)
                .unwrap();
        let r = grid_minimize(&p, 100, DEFAULT_GRID_CAP).unwrap();
        assert_eq!(r.evaluations, 1);
        assert_eq!(r.path_flows, vec![vec![2.0]]);
        assert_eq!(r.objective, 2.0 * (1.0 + 16.0));
    }

    #[test]
    fn grid_cap_enforced() {
        let p = PathSpaceProblem::from_network(
            &fig1(),
            OracleObjective::Deterministic,
            DEFAULT_PATH_CAP,
        )
        .unwrap();
        assert!(matches!(
            grid_minimize(&p, 1000, 10),
            Err(Error::GridTooLarge { .. })
        ));
    }

    #[test]
    fn compositions_in_lexicographic_order() {
        assert_eq!(
            compositions(2, 3),
            vec![
                vec![0, 0, 2],
                vec![0, 1, 1],
                vec![0, 2, 0],
                vec![1, 0, 1],
                vec![1, 1, 0],
                vec![2, 0, 0]
            ]
        );
        assert_eq!(binomial(12, 2), 66);
    }

    #[test]
    fn stationarity_at_known_optima() {
        let n = fig1();
        let r = stationarity_residual(&n, &[0.4206, 0.4206, 0.5794, 0.5794], 1.0).unwrap();
        assert!(r < 2e-3, "{r}");
        let r = stationarity_residual(&n, &[0.5238, 0.5238, 0.4762, 0.4762], 0.0).unwrap();
        assert!(r < 2e-3, "{r}");
        let r = stationarity_residual(&n, &[1.0, 1.0, 0.0, 0.0], 1.0).unwrap();
        assert!(r > 10.0, "{r}");
    }

    #[test]
    fn stationarity_needs_two_path_topology() {
        let n: Network<f64> = "NODES A B\nEDGE A B 1 1\nDEMAND A B 2\n".parse().unwrap();
        assert!(matches!(
            stationarity_residual(&n, &[1.0], 1.0),
            Err(Error::WrongTopology(_))
        ));
    }

    #[test]
    fn zero_spread_monte_carlo_is_exact() {
        let x = [0.5238, 0.5238, 0.4762, 0.4762];
        let (a, b) = (vec![0.3, 0.3, 0.5, 0.5], vec![0.6, 0.6, 0.1, 0.1]);
        let mut g = GeneratorState::new(1);
        let est =
            monte_carlo_expected_cost(&x, &a, &b, &NoiseModel::multiplicative(0.0, 1), 100, &mut g)
                .unwrap();
        assert!((est.mean - scalar_problem(0.5238)).abs() < 1e-12);
        assert_eq!(est.std_error, 0.0);
    }
}
