//! Experiment commands behind the `sfwta` binary. Every command writes CSV
//! data, a matching SVG chart per CSV and a `report.json` into its output
//! directory.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod svg;

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use sfwta_core::cost_model::{expected_social_cost_case1, social_cost, CostParams};
use sfwta_core::fw_solver::{solve_with_sink, FwConfig, FwOutcome, Objective};
use sfwta_core::network::{check_balance, parse_network, Network};
use sfwta_core::sfwta::{
    lemma1_diagnostic, solve_sfwta_with_sink, SfwtaOutcome, StepSchedule, StopRule,
};
use sfwta_core::stochastic_env::{GeneratorState, NoiseModel};
use sfwta_core::trace::{window_means, SolverTrace, TraceRecord, TraceSink};
use sfwta_core::{Error, FlowVector};

use svg::{Chart, Series};

const BALANCE_TOL: f64 = 1e-9;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Solver(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => 1,
            CliError::Solver(_) => 2,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::UnreachableDemand { .. }
            | Error::PathLimitExceeded { .. }
            | Error::NegativeCost { .. }
            | Error::NegativeFlow { .. }
            | Error::NoTrackingData
            | Error::MissingMoments(_)
            | Error::GridTooLarge { .. }
            | Error::WrongTopology(_)
            | Error::UnknownEdge { .. }
            | Error::DimensionMismatch { .. }
            | Error::NoiseOutOfRange { .. } => CliError::Solver(e.to_string()),
            _ => CliError::Input(e.to_string()),
        }
    }
}

fn io_err(path: &Path, e: std::io::Error) -> CliError {
    CliError::Input(format!("{}: {e}", path.display()))
}

#[derive(Debug, Parser)]
#[command(
    name = "sfwta",
    version,
    about = "Stochastic Frank-Wolfe traffic assignment experiments"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve for link flows with one method and print them.
    Solve(SolveArgs),
    /// Running mean of sampled costs for both strategies on shared noise.
    Compare(CompareArgs),
    /// Per-iteration SFWTA convergence trace.
    Trace(TraceArgs),
    /// Expected cost of both strategies across spread values.
    BetaSweep(SweepArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    /// Frank-Wolfe on the deterministic social cost.
    Fw,
    /// Frank-Wolfe on the closed-form expected cost.
    Expected,
    /// Stochastic Frank-Wolfe with gradient tracking.
    Sfwta,
}

/// Options shared by every command.
#[derive(Debug, Clone, Args, Serialize)]
pub struct CommonArgs {
    #[arg(long)]
    pub network: PathBuf,
    /// Spread of the multiplicative noise, in [0, 1].
    #[arg(long, default_value_t = 1.0)]
    pub beta: f64,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Iteration budget (solver iterations or sampling steps).
    #[arg(long, default_value_t = 100_000)]
    pub iters: usize,
    #[arg(long, default_value_t = 4.0)]
    pub rho0: f64,
    #[arg(long, default_value_t = 2.0 / 3.0)]
    pub prho: f64,
    #[arg(long, default_value_t = 2.0)]
    pub gamma0: f64,
    #[arg(long, default_value_t = 1.0)]
    pub pgamma: f64,
    /// Step-size offset `t0` in `(t + t0)^-p`.
    #[arg(long, default_value_t = 8.0)]
    pub t0: f64,
    /// Relative-change stopping tolerance.
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
    /// Consecutive sub-tolerance iterations before SFWTA stops early.
    #[arg(long, default_value_t = 50)]
    pub patience: usize,
    /// Output directory; defaults to ./out/<command>-<unix time>.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Feasibility check interval in iterations; 0 disables.
    #[arg(long, default_value_t = 100)]
    pub snapshot_every: usize,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SolveArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub common: CommonArgs,
    #[arg(long, value_enum, default_value_t = Method::Fw)]
    pub method: Method,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct CompareArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub common: CommonArgs,
    /// How the stochastic strategy's flow is computed.
    #[arg(long, value_enum, default_value_t = Method::Sfwta)]
    pub method: Method,
    /// Independent noise streams averaged into the running means.
    #[arg(long, default_value_t = 1)]
    pub replications: usize,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct TraceArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub common: CommonArgs,
    /// Window length for the first/final mean summary.
    #[arg(long, default_value_t = 100)]
    pub window: usize,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SweepArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub common: CommonArgs,
    /// Spread values; defaults to 0, 0.1, ..., 1.
    #[arg(long, value_delimiter = ',')]
    pub betas: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub command: String,
    pub config: Value,
    pub flows: Vec<f64>,
    pub objective: Option<f64>,
    pub iterations: usize,
    pub duration_secs: f64,
    pub csv: Vec<PathBuf>,
    pub svg: Vec<PathBuf>,
    /// Command-specific diagnostics.
    pub details: BTreeMap<String, Value>,
}

impl CommonArgs {
    fn validate(&self) -> Result<(), CliError> {
        if !(0.0..=1.0).contains(&self.beta) {
            return Err(CliError::Input(format!(
                "--beta {} outside [0, 1]",
                self.beta
            )));
        }
        if self.iters == 0 {
            return Err(CliError::Input("--iters must be at least 1".into()));
        }
        if self.patience == 0 {
            return Err(CliError::Input("--patience must be at least 1".into()));
        }
        if !(self.tol > 0.0) || !self.tol.is_finite() {
            return Err(CliError::Input(format!(
                "--tol {} must be positive",
                self.tol
            )));
        }
        let report = self.schedule().validate();
        if !report.passed() {
            let names: Vec<String> = report.violations.iter().map(ToString::to_string).collect();
            return Err(CliError::Input(format!(
                "step schedule rejected: {}",
                names.join("; ")
            )));
        }
        Ok(())
    }

    fn schedule(&self) -> StepSchedule<f64> {
        StepSchedule {
            rho0: self.rho0,
            p_rho: self.prho,
            gamma0: self.gamma0,
            p_gamma: self.pgamma,
            offset: self.t0,
        }
    }

    fn stop_rule(&self) -> StopRule<f64> {
        StopRule {
            max_iters: self.iters,
            rel_change_tol: self.tol,
            patience: self.patience,
            snapshot_every: self.snapshot_every,
        }
    }

    fn fw_config(&self) -> FwConfig<f64> {
        FwConfig {
            max_iters: self.iters,
            rel_change_tol: self.tol,
            snapshot_every: self.snapshot_every,
            ..FwConfig::default()
        }
    }

    fn load(&self) -> Result<(Network<f64>, CostParams<f64>), CliError> {
        let text = fs::read_to_string(&self.network).map_err(|e| io_err(&self.network, e))?;
        let net = parse_network::<f64>(&text).map_err(|e| match CliError::from(e) {
            CliError::Input(m) => CliError::Input(format!("{}: {m}", self.network.display())),
            CliError::Solver(m) => CliError::Solver(format!("{}: {m}", self.network.display())),
        })?;
        let params = CostParams::from_network(&net);
        Ok((net, params))
    }

    fn out_dir(&self, command: &str) -> Result<PathBuf, CliError> {
        let dir = match &self.out {
            Some(d) => d.clone(),
            None => {
                let secs = SystemTime::now()
                    .duration_since(UNIX_EPOCH)
                    .map(|d| d.as_secs())
                    .unwrap_or(0);
                PathBuf::from("out").join(format!("{command}-{secs}"))
            }
        };
        fs::create_dir_all(&dir).map_err(|e| io_err(&dir, e))?;
        Ok(dir)
    }
}

/// Forwards trace records and checks flow balance at every snapshot.
struct CheckedSink<'a> {
    net: &'a Network<f64>,
    trace: SolverTrace<f64>,
    max_residual: f64,
    checked: usize,
}

impl<'a> CheckedSink<'a> {
    fn new(net: &'a Network<f64>) -> Self {
        Self {
            net,
            trace: SolverTrace::default(),
            max_residual: 0.0,
            checked: 0,
        }
    }

    fn check(&mut self, x: &[f64]) {
        if let Ok(r) = check_balance(x, self.net, BALANCE_TOL) {
            self.max_residual = self.max_residual.max(r.max_residual);
        }
        self.checked += 1;
    }
}

impl TraceSink<f64> for CheckedSink<'_> {
    fn record(&mut self, record: TraceRecord<f64>) {
        self.trace.record(record);
    }

    fn snapshot(&mut self, _iteration: usize, x: &FlowVector<f64>) {
        self.check(x);
    }
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

/// Collects output files for the report.
struct Outputs {
    command: &'static str,
    config: Value,
    started: Instant,
    dir: PathBuf,
    csv: Vec<PathBuf>,
    svg: Vec<PathBuf>,
}

impl Outputs {
    fn new<A: Serialize>(
        command: &'static str,
        args: &A,
        common: &CommonArgs,
        started: Instant,
    ) -> Result<Self, CliError> {
        Ok(Self {
            command,
            config: serde_json::to_value(args).unwrap_or(Value::Null),
            started,
            dir: common.out_dir(command)?,
            csv: Vec::new(),
            svg: Vec::new(),
        })
    }

    fn write_csv(&mut self, name: &str, body: &str) -> Result<(), CliError> {
        let path = self.dir.join(name);
        fs::write(&path, body).map_err(|e| io_err(&path, e))?;
        self.csv.push(path);
        Ok(())
    }

    fn write_svg(&mut self, name: &str, chart: &Chart) -> Result<(), CliError> {
        let path = self.dir.join(name);
        fs::write(&path, chart.render()).map_err(|e| io_err(&path, e))?;
        self.svg.push(path);
        Ok(())
    }

    fn finish(
        self,
        flows: Vec<f64>,
        objective: Option<f64>,
        iterations: usize,
        details: BTreeMap<String, Value>,
    ) -> Result<RunReport, CliError> {
        let report = RunReport {
            command: self.command.to_string(),
            config: self.config,
            flows,
            objective,
            iterations,
            duration_secs: self.started.elapsed().as_secs_f64(),
            csv: self.csv,
            svg: self.svg,
            details,
        };
        let path = self.dir.join("report.json");
        let body =
            serde_json::to_string_pretty(&report).map_err(|e| CliError::Input(e.to_string()))?;
        fs::write(&path, body + "\n").map_err(|e| io_err(&path, e))?;
        Ok(report)
    }
}

fn flows_csv(net: &Network<f64>, x: &[f64]) -> String {
    let mut s = String::from("edge_id (index),tail (node),head (node),flow (demand units)\n");
    for (i, (e, f)) in net.edges().iter().zip(x).enumerate() {
        let _ = writeln!(
            s,
            "{i},{},{},{f}",
            net.node_name(e.tail),
            net.node_name(e.head)
        );
    }
    s
}

fn flows_chart(x: &[f64]) -> Chart<'static> {
    Chart {
        title: "Link flows",
        x_label: "edge id",
        y_label: "flow",
        log_y: false,
        series: vec![Series {
            label: "flow",
            points: x.iter().enumerate().map(|(i, &f)| (i as f64, f)).collect(),
        }],
    }
}

fn trace_csv(trace: &SolverTrace<f64>) -> String {
    let mut s = String::from(
        "iteration (count),max_rel_change (ratio),sampled_cost (cost),tracking_error (cost^2)\n",
    );
    for r in &trace.records {
        let _ = writeln!(
            s,
            "{},{},{},{}",
            r.iteration,
            r.max_rel_change,
            r.cost,
            fmt_opt(r.tracking_error)
        );
    }
    s
}

fn trace_chart(trace: &SolverTrace<f64>) -> Chart<'static> {
    let mut series = vec![Series {
        label: "max relative change",
        points: trace
            .records
            .iter()
            .map(|r| (r.iteration as f64, r.max_rel_change))
            .collect(),
    }];
    if let Some(errors) = trace.tracking_errors() {
        series.push(Series {
            label: "tracking error",
            points: errors
                .iter()
                .enumerate()
                .map(|(i, &e)| (i as f64, e))
                .collect(),
        });
    }
    Chart {
        title: "Convergence trace",
        x_label: "iteration",
        y_label: "value",
        log_y: true,
        series,
    }
}

fn fw_run(
    net: &Network<f64>,
    p: &CostParams<f64>,
    objective: Objective<f64>,
    common: &CommonArgs,
) -> Result<(FwOutcome<f64>, f64, usize), CliError> {
    let mut sink = CheckedSink::new(net);
    let mut out = solve_with_sink(net, p, objective, &common.fw_config(), &mut sink)?;
    sink.check(&out.flow);
    out.trace = sink.trace;
    Ok((out, sink.max_residual, sink.checked))
}

fn sfwta_run(
    net: &Network<f64>,
    p: &CostParams<f64>,
    common: &CommonArgs,
) -> Result<(SfwtaOutcome<f64>, f64, usize), CliError> {
    let mut sink = CheckedSink::new(net);
    let noise = NoiseModel::multiplicative(common.beta, common.seed);
    let mut out = solve_sfwta_with_sink(
        net,
        p,
        &noise,
        &common.schedule(),
        &common.stop_rule(),
        &mut sink,
    )?;
    sink.check(&out.flow);
    out.trace = sink.trace;
    Ok((out, sink.max_residual, sink.checked))
}

fn feasibility(details: &mut BTreeMap<String, Value>, residual: f64, checked: usize) {
    details.insert("max_balance_residual".into(), json!(residual));
    details.insert("balance_checks".into(), json!(checked));
    details.insert("feasible".into(), json!(residual <= BALANCE_TOL * 10.0));
}

pub fn cmd_solve(args: &SolveArgs) -> Result<RunReport, CliError> {
    let started = Instant::now();
    let common = &args.common;
    common.validate()?;
    let (net, p) = common.load()?;
    let mut out = Outputs::new("solve", args, common, started)?;
    let mut details = BTreeMap::new();

    let (flow, objective, iterations, trace) = match args.method {
        Method::Fw | Method::Expected => {
            let obj = if args.method == Method::Fw {
                Objective::Deterministic
            } else {
                Objective::ExpectedCase1 { beta: common.beta }
            };
            let (o, residual, checked) = fw_run(&net, &p, obj, common)?;
            feasibility(&mut details, residual, checked);
            details.insert("gap".into(), json!(o.gap));
            details.insert("converged".into(), json!(o.converged));
            (o.flow, o.objective, o.iterations, o.trace)
        }
        Method::Sfwta => {
            let (o, residual, checked) = sfwta_run(&net, &p, common)?;
            feasibility(&mut details, residual, checked);
            details.insert("stopped_early".into(), json!(o.stopped_early));
            let objective = expected_social_cost_case1(&o.flow, common.beta, &p)?;
            (o.flow, objective, o.iterations, o.trace)
        }
    };

    out.write_csv("flows.csv", &flows_csv(&net, &flow))?;
    out.write_svg("flows.svg", &flows_chart(&flow))?;
    out.write_csv("trace.csv", &trace_csv(&trace))?;
    out.write_svg("trace.svg", &trace_chart(&trace))?;
    out.finish(flow.into_inner(), Some(objective), iterations, details)
}

/// Running means of `social_cost(x + z_t)` for two fixed flows driven by the
/// same uniform multipliers.
pub fn common_noise_running_means(
    xs: &[f64],
    xd: &[f64],
    p: &CostParams<f64>,
    beta: f64,
    steps: usize,
    gen: &mut GeneratorState,
) -> Result<(Vec<f64>, Vec<f64>), Error> {
    let n = xs.len();
    let (mut fs_, mut fd) = (vec![0.0; n], vec![0.0; n]);
    let (mut sum_s, mut sum_d) = (0.0, 0.0);
    let mut means = (Vec::with_capacity(steps), Vec::with_capacity(steps));
    for t in 1..=steps {
        for e in 0..n {
            let u = gen.uniform_pm1();
            fs_[e] = xs[e] * (1.0 + beta * u);
            fd[e] = xd[e] * (1.0 + beta * u);
        }
        sum_s += social_cost(&fs_, p)?;
        sum_d += social_cost(&fd, p)?;
        means.0.push(sum_s / t as f64);
        means.1.push(sum_d / t as f64);
    }
    Ok(means)
}

pub fn cmd_compare(args: &CompareArgs) -> Result<RunReport, CliError> {
    let started = Instant::now();
    let common = &args.common;
    common.validate()?;
    if args.replications == 0 {
        return Err(CliError::Input("--replications must be at least 1".into()));
    }
    if args.method == Method::Fw {
        return Err(CliError::Input(
            "--method for compare must be expected or sfwta".into(),
        ));
    }
    let (net, p) = common.load()?;
    let mut out = Outputs::new("compare", args, common, started)?;
    let mut details = BTreeMap::new();

    let (det, r_det, c_det) = fw_run(&net, &p, Objective::Deterministic, common)?;
    let (stoch, r_s, c_s) = match args.method {
        Method::Sfwta => {
            let (o, r, c) = sfwta_run(&net, &p, common)?;
            (o.flow, r, c)
        }
        _ => {
            let (o, r, c) = fw_run(
                &net,
                &p,
                Objective::ExpectedCase1 { beta: common.beta },
                common,
            )?;
            (o.flow, r, c)
        }
    };
    feasibility(&mut details, r_det.max(r_s), c_det + c_s);

    let runs: Vec<(Vec<f64>, Vec<f64>)> = (0..args.replications as u64)
        .into_par_iter()
        .map(|r| {
            let mut gen = GeneratorState::derived(common.seed, r);
            common_noise_running_means(&stoch, &det.flow, &p, common.beta, common.iters, &mut gen)
        })
        .collect::<Result<_, _>>()?;
    let reps = runs.len() as f64;
    let mean_s: Vec<f64> = (0..common.iters)
        .map(|t| runs.iter().map(|r| r.0[t]).sum::<f64>() / reps)
        .collect();
    let mean_d: Vec<f64> = (0..common.iters)
        .map(|t| runs.iter().map(|r| r.1[t]).sum::<f64>() / reps)
        .collect();

    let mut csv = String::from(
        "step (count),running_mean_stochastic (cost),running_mean_deterministic (cost)\n",
    );
    for t in 0..common.iters {
        let _ = writeln!(csv, "{},{},{}", t + 1, mean_s[t], mean_d[t]);
    }
    out.write_csv("compare.csv", &csv)?;
    out.write_svg(
        "compare.svg",
        &Chart {
            title: "Running mean of sampled social cost",
            x_label: "step",
            y_label: "running mean cost",
            log_y: false,
            series: vec![
                Series {
                    label: "stochastic",
                    points: mean_s
                        .iter()
                        .enumerate()
                        .map(|(i, &v)| ((i + 1) as f64, v))
                        .collect(),
                },
                Series {
                    label: "deterministic",
                    points: mean_d
                        .iter()
                        .enumerate()
                        .map(|(i, &v)| ((i + 1) as f64, v))
                        .collect(),
                },
            ],
        },
    )?;

    let final_s = *mean_s.last().unwrap();
    let final_d = *mean_d.last().unwrap();
    let last_violation = mean_s
        .iter()
        .zip(&mean_d)
        .rposition(|(s, d)| s >= d)
        .map(|i| i + 1);
    details.insert("flows_stochastic".into(), json!(stoch.as_slice()));
    details.insert("flows_deterministic".into(), json!(det.flow.as_slice()));
    details.insert("final_running_mean_stochastic".into(), json!(final_s));
    details.insert("final_running_mean_deterministic".into(), json!(final_d));
    details.insert(
        "expected_cost_stochastic".into(),
        json!(expected_social_cost_case1(&stoch, common.beta, &p)?),
    );
    details.insert(
        "expected_cost_deterministic".into(),
        json!(expected_social_cost_case1(&det.flow, common.beta, &p)?),
    );
    details.insert(
        "last_step_stochastic_not_lower".into(),
        json!(last_violation),
    );
    details.insert(
        "noise".into(),
        json!("common random numbers: both strategies share each step's multipliers"),
    );
    out.finish(stoch.into_inner(), Some(final_s), common.iters, details)
}

pub fn cmd_trace(args: &TraceArgs) -> Result<RunReport, CliError> {
    let started = Instant::now();
    let common = &args.common;
    common.validate()?;
    if args.window == 0 {
        return Err(CliError::Input("--window must be at least 1".into()));
    }
    let (net, p) = common.load()?;
    let mut out = Outputs::new("trace", args, common, started)?;
    let mut details = BTreeMap::new();

    let (o, residual, checked) = sfwta_run(&net, &p, common)?;
    feasibility(&mut details, residual, checked);
    let rel = o.trace.max_rel_changes();
    if let Some((first, last)) = window_means(&rel, args.window) {
        details.insert("first_window_mean_rel_change".into(), json!(first));
        details.insert("final_window_mean_rel_change".into(), json!(last));
        details.insert("decreasing".into(), json!(last < first));
    }
    if let Ok(l) = lemma1_diagnostic(&o.trace, args.window) {
        details.insert(
            "tracking_error_first_window_mean".into(),
            json!(l.first_window_mean),
        );
        details.insert(
            "tracking_error_final_window_mean".into(),
            json!(l.final_window_mean),
        );
        details.insert("tracking_error_reduction".into(), json!(l.reduction()));
    }
    out.write_csv("trace.csv", &trace_csv(&o.trace))?;
    out.write_svg("trace.svg", &trace_chart(&o.trace))?;
    let objective = expected_social_cost_case1(&o.flow, common.beta, &p)?;
    out.finish(o.flow.into_inner(), Some(objective), o.iterations, details)
}

pub fn default_betas() -> Vec<f64> {
    (0..=10).map(|i| i as f64 / 10.0).collect()
}

pub fn cmd_beta_sweep(args: &SweepArgs) -> Result<RunReport, CliError> {
    let started = Instant::now();
    let common = &args.common;
    common.validate()?;
    let betas = if args.betas.is_empty() {
        default_betas()
    } else {
        args.betas.clone()
    };
    if let Some(b) = betas.iter().find(|b| !(0.0..=1.0).contains(*b)) {
        return Err(CliError::Input(format!("beta {b} outside [0, 1]")));
    }
    let (net, p) = common.load()?;
    let mut out = Outputs::new("beta-sweep", args, common, started)?;
    let mut details = BTreeMap::new();

    let (det, r_det, c_det) = fw_run(&net, &p, Objective::Deterministic, common)?;
    let rows: Vec<(f64, f64, f64, f64, usize)> = betas
        .par_iter()
        .map(|&beta| -> Result<_, CliError> {
            let (o, r, c) = fw_run(&net, &p, Objective::ExpectedCase1 { beta }, common)?;
            let cs = expected_social_cost_case1(&o.flow, beta, &p)?;
            let cd = expected_social_cost_case1(&det.flow, beta, &p)?;
            Ok((beta, cs, cd, r, c))
        })
        .collect::<Result<_, _>>()?;
    let residual = rows.iter().map(|r| r.3).fold(r_det, f64::max);
    feasibility(
        &mut details,
        residual,
        c_det + rows.iter().map(|r| r.4).sum::<usize>(),
    );

    let mut csv = String::from("beta (spread),cost_stoch (cost),cost_det (cost)\n");
    for (b, cs, cd, _, _) in &rows {
        let _ = writeln!(csv, "{b},{cs},{cd}");
    }
    out.write_csv("sweep.csv", &csv)?;
    out.write_svg(
        "sweep.svg",
        &Chart {
            title: "Expected social cost versus spread",
            x_label: "beta",
            y_label: "expected cost",
            log_y: false,
            series: vec![
                Series {
                    label: "stochastic",
                    points: rows.iter().map(|r| (r.0, r.1)).collect(),
                },
                Series {
                    label: "deterministic",
                    points: rows.iter().map(|r| (r.0, r.2)).collect(),
                },
            ],
        },
    )?;

    // Curve checks assume betas in ascending order.
    let ascending = rows.windows(2).all(|w| w[0].0 < w[1].0);
    let monotone = ascending
        && rows
            .windows(2)
            .all(|w| w[1].1 >= w[0].1 && w[1].2 >= w[0].2);
    let dominated = rows.iter().all(|r| r.1 <= r.2 + 1e-12);
    let gap_at = |b: f64| rows.iter().find(|r| r.0 == b).map(|r| r.2 - r.1);
    details.insert("costs_nondecreasing".into(), json!(monotone));
    details.insert("stochastic_not_worse".into(), json!(dominated));
    details.insert("gap_at_0.1".into(), json!(gap_at(0.1)));
    details.insert("gap_at_1".into(), json!(gap_at(1.0)));
    if let (Some(g1), Some(g01)) = (gap_at(1.0), gap_at(0.1)) {
        details.insert("gap_grows".into(), json!(g1 > g01));
    }
    let last = rows.last().map(|r| r.1);
    out.finish(det.flow.into_inner(), last, rows.len(), details)
}

/// Human-readable summary printed to standard output.
pub fn summary(report: &RunReport) -> String {
    let mut s = String::new();
    let flows: Vec<String> = report.flows.iter().map(|f| format!("{f:.4}")).collect();
    let _ = writeln!(s, "flows {}", flows.join(" "));
    if let Some(o) = report.objective {
        let _ = writeln!(s, "objective {o:.6}");
    }
    let _ = writeln!(s, "iterations {}", report.iterations);
    for (k, v) in &report.details {
        let _ = writeln!(s, "{k} {v}");
    }
    if let Some(dir) = report.csv.first().and_then(|p| p.parent()) {
        let _ = writeln!(s, "output {}", dir.display());
    }
    s
}

pub fn run(cli: &Cli) -> Result<RunReport, CliError> {
    match &cli.command {
        Command::Solve(a) => cmd_solve(a),
        Command::Compare(a) => cmd_compare(a),
        Command::Trace(a) => cmd_trace(a),
        Command::BetaSweep(a) => cmd_beta_sweep(a),
    }
}
