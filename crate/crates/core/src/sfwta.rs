//! Online stochastic Frank-Wolfe traffic assignment.
//!
//! Each iteration samples the random flow `z`, evaluates the stochastic
//! gradient at `f = x + z`, folds it into the running estimate
//! `d <- (1 - rho_t) d + rho_t grad`, routes all demand along shortest paths
//! under `d`, and moves `x` toward that vertex with step `gamma_{t+1}`.
//! `x` stays a convex combination of all-or-nothing vertices, so it is
//! feasible at every iteration.

use std::fmt;

use crate::cost_model::{
    clamped_sum, expected_gradient_case1, expected_gradient_case2, social_cost_unchecked,
    stochastic_gradient_case1, stochastic_gradient_case2, CostParams, GradientVector,
};
use crate::error::{Error, Result};
use crate::fw_solver::REL_CHANGE_FLOOR;
use crate::network::{FlowVector, Network};
use crate::scalar::Scalar;
use crate::shortest_path::aon_flow;
use crate::stochastic_env::{sample_noise, GeneratorState, NoiseKind, NoiseModel};
use crate::trace::{max_relative_change, windowed_means, SolverTrace, TraceRecord, TraceSink};

/// Power-law step sizes `rho_t = rho0 (t + offset)^-p_rho` and
/// `gamma_t = gamma0 (t + offset)^-p_gamma`, both capped at 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepSchedule<T> {
    pub rho0: T,
    pub p_rho: T,
    pub gamma0: T,
    pub p_gamma: T,
    pub offset: T,
}

impl<T: Scalar> Default for StepSchedule<T> {
    /// `rho_t = 4 (t + 8)^(-2/3)` (so `rho_0 = 1`), `gamma_t = 2 / (t + 8)`.
    fn default() -> Self {
        Self {
            rho0: T::lit(4.0),
            p_rho: T::lit(2.0 / 3.0),
            gamma0: T::lit(2.0),
            p_gamma: T::one(),
            offset: T::lit(8.0),
        }
    }
}

impl<T: Scalar> StepSchedule<T> {
    /// Constant steps; useful for degenerate checks, fails validation.
    pub fn constant(rho: T, gamma: T) -> Self {
        Self {
            rho0: rho,
            p_rho: T::zero(),
            gamma0: gamma,
            p_gamma: T::zero(),
            offset: T::one(),
        }
    }

    pub fn rho(&self, t: usize) -> T {
        (self.rho0 * (T::from_count(t) + self.offset).powf(-self.p_rho)).min(T::one())
    }

    pub fn gamma(&self, t: usize) -> T {
        (self.gamma0 * (T::from_count(t) + self.offset).powf(-self.p_gamma)).min(T::one())
    }

    pub fn validate(&self) -> ScheduleReport {
        validate_schedule(self)
    }
}

/// Step-size requirement a schedule can violate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScheduleCondition {
    /// (i) `sum rho_t = inf`: needs `p_rho <= 1`.
    RhoSumDiverges,
    /// (ii) `sum rho_t^2 < inf`: needs `p_rho > 1/2`.
    RhoSquaresSummable,
    /// (iii) `sum gamma_t = inf`: needs `p_gamma <= 1`.
    GammaSumDiverges,
    /// (iv) `sum gamma_t^2 / rho_t < inf`: needs `2 p_gamma - p_rho > 1`.
    GammaRatioSummable,
    /// Steps must be positive and at most 1 for every `t >= 0`.
    StepRange,
}

impl fmt::Display for ScheduleCondition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Self::RhoSumDiverges => "(i) sum of rho_t must diverge (p_rho <= 1)",
            Self::RhoSquaresSummable => "(ii) sum of rho_t^2 must converge (p_rho > 1/2)",
            Self::GammaSumDiverges => "(iii) sum of gamma_t must diverge (p_gamma <= 1)",
            Self::GammaRatioSummable => {
                "(iv) sum of gamma_t^2 / rho_t must converge (2 p_gamma - p_rho > 1)"
            }
            Self::StepRange => "steps must lie in (0, 1]",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScheduleReport {
    pub violations: Vec<ScheduleCondition>,
}

impl ScheduleReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks the power-law exponents against the four summability conditions
/// (p-series tests) and the step range.
pub fn validate_schedule<T: Scalar>(s: &StepSchedule<T>) -> ScheduleReport {
    let mut violations = Vec::new();
    let half = T::lit(0.5);
    if !(s.p_rho <= T::one()) {
        violations.push(ScheduleCondition::RhoSumDiverges);
    }
    if !(s.p_rho > half) {
        violations.push(ScheduleCondition::RhoSquaresSummable);
    }
    if !(s.p_gamma <= T::one()) {
        violations.push(ScheduleCondition::GammaSumDiverges);
    }
    if !(T::lit(2.0) * s.p_gamma - s.p_rho > T::one()) {
        violations.push(ScheduleCondition::GammaRatioSummable);
    }
    let range_ok = s.rho0 > T::zero()
        && s.gamma0 > T::zero()
        && s.offset > T::zero()
        && s.p_rho >= T::zero()
        && s.p_gamma >= T::zero()
        && s.rho0.is_finite()
        && s.gamma0.is_finite();
    if !range_ok {
        violations.push(ScheduleCondition::StepRange);
    }
    ScheduleReport { violations }
}

/// Solver state between iterations.
#[derive(Debug, Clone)]
pub struct SfwtaState<T> {
    /// Iterations completed.
    pub t: usize,
    /// Deterministic (mean) flow.
    pub x: FlowVector<T>,
    /// Running gradient estimate used as shortest-path link costs.
    pub d: GradientVector<T>,
    pub gen: GeneratorState,
    /// Edges clamped to zero total flow under additive noise, summed over iterations.
    pub clamped: usize,
    /// Record `||grad F(x_t) - d_t||^2` when the expected gradient has a closed form.
    pub track_gradient: bool,
    pub snapshot_every: usize,
    pub trace: SolverTrace<T>,
}

impl<T: Scalar> SfwtaState<T> {
    /// Initial state: all-or-nothing flow at free-flow costs, zero gradient
    /// estimate, generator seeded from the noise model.
    pub fn new(
        network: &Network<T>,
        params: &CostParams<T>,
        noise: &NoiseModel<T>,
    ) -> Result<Self> {
        network.check_dim(params.len())?;
        noise.validate(network.edge_count())?;
        Ok(Self {
            t: 0,
            x: aon_flow(network, &params.a)?,
            d: GradientVector(vec![T::zero(); network.edge_count()]),
            gen: noise.generator(),
            clamped: 0,
            track_gradient: true,
            snapshot_every: 100,
            trace: SolverTrace::default(),
        })
    }

    /// Same, starting from a given feasible flow.
    pub fn with_flow(x: FlowVector<T>, noise: &NoiseModel<T>) -> Self {
        let n = x.len();
        Self {
            t: 0,
            x,
            d: GradientVector(vec![T::zero(); n]),
            gen: noise.generator(),
            clamped: 0,
            track_gradient: true,
            snapshot_every: 100,
            trace: SolverTrace::default(),
        }
    }

    fn step_with_sink<S: TraceSink<T>>(
        &mut self,
        network: &Network<T>,
        params: &CostParams<T>,
        noise: &NoiseModel<T>,
        schedule: &StepSchedule<T>,
        sink: &mut S,
    ) -> Result<()> {
        let sample = sample_noise(&self.x, &noise.kind, &mut self.gen)?;
        let (f, clamped) = clamped_sum(&self.x, &sample.z);
        let sampled_grad = match (&noise.kind, &sample.u) {
            (NoiseKind::MultiplicativeUniform { beta }, Some(u)) => {
                stochastic_gradient_case1(&self.x, u, *beta, params)?
            }
            _ => {
                let (g, _) = stochastic_gradient_case2(&self.x, &sample.z, params)?;
                g
            }
        };
        self.clamped += clamped;

        let rho = schedule.rho(self.t);
        for (d, &g) in self.d.0.iter_mut().zip(sampled_grad.iter()) {
            *d = (T::one() - rho) * *d + rho * g;
        }

        let tracking_error = if self.track_gradient {
            let expected = match &noise.kind {
                NoiseKind::MultiplicativeUniform { beta } => {
                    Some(expected_gradient_case1(&self.x, *beta, params)?)
                }
                NoiseKind::AdditiveIndependent(_) => noise
                    .additive_moments()
                    .map(|m| expected_gradient_case2(&self.x, &m, params))
                    .transpose()?,
            };
            expected.map(|g| {
                g.iter()
                    .zip(self.d.iter())
                    .map(|(&g, &d)| (g - d) * (g - d))
                    .sum::<T>()
            })
        } else {
            None
        };

        let y = aon_flow(network, &self.d)?;
        let step = schedule.gamma(self.t + 1);
        let next = self.x.toward(&y, step);
        let rel = max_relative_change(&self.x, &next, T::lit(REL_CHANGE_FLOOR));
        sink.record(TraceRecord {
            iteration: self.t,
            max_rel_change: rel,
            cost: social_cost_unchecked(&f, params),
            tracking_error,
            gap: None,
        });
        self.x = next;
        self.t += 1;
        if self.snapshot_every > 0 && self.t.is_multiple_of(self.snapshot_every) {
            sink.snapshot(self.t, &self.x);
        }
        Ok(())
    }
}

/// Executes one iteration, appending to `state.trace`.
pub fn sfwta_step<T: Scalar>(
    state: &mut SfwtaState<T>,
    network: &Network<T>,
    params: &CostParams<T>,
    noise: &NoiseModel<T>,
    schedule: &StepSchedule<T>,
) -> Result<()> {
    let mut trace = std::mem::take(&mut state.trace);
    let result = state.step_with_sink(network, params, noise, schedule, &mut trace);
    state.trace = trace;
    result
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StopRule<T> {
    pub max_iters: usize,
    pub rel_change_tol: T,
    /// Consecutive sub-threshold iterations required to stop early.
    pub patience: usize,
    /// Flow snapshot interval in the trace; 0 disables snapshots.
    pub snapshot_every: usize,
}

impl<T: Scalar> Default for StopRule<T> {
    fn default() -> Self {
        Self {
            max_iters: 100_000,
            rel_change_tol: T::lit(1e-6),
            patience: 50,
            snapshot_every: 100,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SfwtaOutcome<T> {
    /// Last iterate.
    pub flow: FlowVector<T>,
    pub iterations: usize,
    /// True when the patience rule stopped the run before `max_iters`.
    pub stopped_early: bool,
    pub clamped: usize,
    pub trace: SolverTrace<T>,
}

pub fn solve_sfwta<T: Scalar>(
    network: &Network<T>,
    params: &CostParams<T>,
    noise: &NoiseModel<T>,
    schedule: &StepSchedule<T>,
    stop: &StopRule<T>,
) -> Result<SfwtaOutcome<T>> {
    let mut trace = SolverTrace::default();
    let mut out = solve_sfwta_with_sink(network, params, noise, schedule, stop, &mut trace)?;
    out.trace = trace;
    Ok(out)
}

/// Runs the solver, streaming trace records into `sink`. The returned
/// outcome carries an empty trace.
pub fn solve_sfwta_with_sink<T: Scalar, S: TraceSink<T>>(
    network: &Network<T>,
    params: &CostParams<T>,
    noise: &NoiseModel<T>,
    schedule: &StepSchedule<T>,
    stop: &StopRule<T>,
    sink: &mut S,
) -> Result<SfwtaOutcome<T>> {
    let report = validate_schedule(schedule);
    if !report.passed() {
        let names: Vec<String> = report.violations.iter().map(ToString::to_string).collect();
        return Err(Error::InvalidConfig(format!(
            "step schedule: {}",
            names.join("; ")
        )));
    }
    if stop.max_iters == 0 || stop.patience == 0 || !(stop.rel_change_tol > T::zero()) {
        return Err(Error::InvalidConfig(
            "max_iters and patience must be at least 1 and rel_change_tol positive".into(),
        ));
    }
    let mut state = SfwtaState::new(network, params, noise)?;
    state.snapshot_every = stop.snapshot_every;
    let mut quiet = 0;
    let mut stopped_early = false;
    while state.t < stop.max_iters {
        let before = state.x.clone();
        state.step_with_sink(network, params, noise, schedule, sink)?;
        let rel = max_relative_change(&before, &state.x, T::lit(REL_CHANGE_FLOOR));
        quiet = if rel < stop.rel_change_tol {
            quiet + 1
        } else {
            0
        };
        if quiet >= stop.patience {
            stopped_early = state.t < stop.max_iters;
            break;
        }
    }
    Ok(SfwtaOutcome {
        iterations: state.t,
        flow: state.x,
        stopped_early,
        clamped: state.clamped,
        trace: SolverTrace::default(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Lemma1Summary<T> {
    pub initial_error: T,
    pub final_error: T,
    pub first_window_mean: T,
    pub final_window_mean: T,
    /// Fraction of consecutive window pairs whose mean decreased.
    pub decreasing_fraction: T,
}

impl<T: Scalar> Lemma1Summary<T> {
    /// `first_window_mean / final_window_mean`.
    pub fn reduction(&self) -> T {
        self.first_window_mean / self.final_window_mean
    }
}

/// Summarizes the gradient-tracking error trajectory over non-overlapping
/// windows of `window` iterations.
pub fn lemma1_diagnostic<T: Scalar>(
    trace: &SolverTrace<T>,
    window: usize,
) -> Result<Lemma1Summary<T>> {
    let errors = trace.tracking_errors().ok_or(Error::NoTrackingData)?;
    if errors.is_empty() {
        return Err(Error::NoTrackingData);
    }
    let means = windowed_means(&errors, window);
    let pairs = means.len().saturating_sub(1);
    let decreasing = means.windows(2).filter(|w| w[1] < w[0]).count();
    Ok(Lemma1Summary {
        initial_error: errors[0],
        final_error: *errors.last().unwrap(),
        first_window_mean: means[0],
        final_window_mean: *means.last().unwrap(),
        decreasing_fraction: if pairs == 0 {
            T::zero()
        } else {
            T::from_count(decreasing) / T::from_count(pairs)
        },
    })
}
