//! Road network model: nodes, directed edges with quartic cost parameters,
//! sparse origin-destination demand, edge flow vectors, and the text format.
//!
//! ```text
//! NODES A B C D
//! # EDGE tail head a b
//! EDGE A B 0.3 0.6
//! DEMAND A D 1.0
//! ```
//!
//! Edges are indexed in file order and every per-edge vector in the crate
//! uses that order.

use std::collections::{HashMap, VecDeque};
use std::fmt::Write as _;
use std::ops::Deref;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Default cap on simple paths enumerated per OD pair.
pub const DEFAULT_PATH_CAP: usize = 10_000;

#[derive(Debug, Clone, PartialEq)]
pub struct Edge<T> {
    pub tail: usize,
    pub head: usize,
    /// Free-flow cost coefficient.
    pub a: T,
    /// Congestion coefficient multiplying the fourth power of flow.
    pub b: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Demand<T> {
    pub origin: usize,
    pub destination: usize,
    pub rate: T,
}

/// Validated, immutable road network.
#[derive(Debug, Clone, PartialEq)]
pub struct Network<T> {
    nodes: Vec<String>,
    node_index: HashMap<String, usize>,
    edges: Vec<Edge<T>>,
    /// Positive demands only, sorted by (origin, destination).
    demands: Vec<Demand<T>>,
    out_edges: Vec<Vec<usize>>,
}

impl<T: Scalar> Network<T> {
    /// Builds and validates a network from node names, `(tail, head, a, b)`
    /// edges and `(origin, destination, rate)` demands. Zero-rate demands are
    /// dropped.
    pub fn new<S: AsRef<str>>(
        nodes: &[S],
        edges: &[(S, S, T, T)],
        demands: &[(S, S, T)],
    ) -> Result<Self> {
        let mut builder = Builder::default();
        for n in nodes {
            builder.add_node(n.as_ref()).map_err(config)?;
        }
        for (t, h, a, b) in edges {
            builder
                .add_edge(t.as_ref(), h.as_ref(), *a, *b)
                .map_err(|e| e.into_error())?;
        }
        for (o, d, r) in demands {
            builder
                .add_demand(o.as_ref(), d.as_ref(), *r)
                .map_err(|e| e.into_error())?;
        }
        builder.finish()
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn nodes(&self) -> &[String] {
        &self.nodes
    }

    pub fn node_name(&self, idx: usize) -> &str {
        &self.nodes[idx]
    }

    pub fn node_id(&self, name: &str) -> Option<usize> {
        self.node_index.get(name).copied()
    }

    pub fn edges(&self) -> &[Edge<T>] {
        &self.edges
    }

    pub fn edge(&self, idx: usize) -> &Edge<T> {
        &self.edges[idx]
    }

    /// Positive demands sorted by origin, then destination.
    pub fn demands(&self) -> &[Demand<T>] {
        &self.demands
    }

    /// Outgoing edge indices of `node`, ascending.
    pub fn out_edges(&self, node: usize) -> &[usize] {
        &self.out_edges[node]
    }

    pub fn total_demand(&self) -> T {
        self.demands.iter().map(|d| d.rate).sum()
    }

    pub fn edge_label(&self, idx: usize) -> (&str, &str) {
        let e = &self.edges[idx];
        (&self.nodes[e.tail], &self.nodes[e.head])
    }

    /// Writes the network in the line-oriented text format. Parsing the
    /// output yields an equal network.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str("NODES");
        for n in &self.nodes {
            out.push(' ');
            out.push_str(n);
        }
        out.push('\n');
        for e in &self.edges {
            let _ = writeln!(
                out,
                "EDGE {} {} {} {}",
                self.nodes[e.tail], self.nodes[e.head], e.a, e.b
            );
        }
        for d in &self.demands {
            let _ = writeln!(
                out,
                "DEMAND {} {} {}",
                self.nodes[d.origin], self.nodes[d.destination], d.rate
            );
        }
        out
    }

    pub(crate) fn demand_error(&self, d: &Demand<T>) -> Error {
        Error::UnreachableDemand {
            origin: self.nodes[d.origin].clone(),
            destination: self.nodes[d.destination].clone(),
        }
    }

    pub(crate) fn check_dim(&self, len: usize) -> Result<()> {
        if len != self.edges.len() {
            return Err(Error::DimensionMismatch {
                expected: self.edges.len(),
                found: len,
            });
        }
        Ok(())
    }

    fn reachable_from(&self, origin: usize) -> Vec<bool> {
        let mut seen = vec![false; self.nodes.len()];
        let mut queue = VecDeque::from([origin]);
        seen[origin] = true;
        while let Some(u) = queue.pop_front() {
            for &e in &self.out_edges[u] {
                let v = self.edges[e].head;
                if !seen[v] {
                    seen[v] = true;
                    queue.push_back(v);
                }
            }
        }
        seen
    }
}

fn config(m: String) -> Error {
    Error::InvalidConfig(m)
}

/// Parses and validates the network text format.
pub fn parse_network<T: Scalar>(text: &str) -> Result<Network<T>> {
    let mut builder = Builder::default();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let mut tokens = content.split_whitespace();
        let keyword = tokens.next().unwrap_or_default();
        let args: Vec<&str> = tokens.collect();
        let parse_err = |message: String| Error::Parse { line, message };
        match keyword {
            "NODES" => {
                if args.is_empty() {
                    return Err(parse_err("NODES needs at least one node".into()));
                }
                for n in args {
                    builder.add_node(n).map_err(parse_err)?;
                }
            }
            "EDGE" => {
                let [tail, head, a, b] = args[..] else {
                    return Err(parse_err(format!(
                        "EDGE expects 4 fields (tail head a b), found {}",
                        args.len()
                    )));
                };
                let a = number::<T>(a).map_err(parse_err)?;
                let b = number::<T>(b).map_err(parse_err)?;
                builder
                    .add_edge(tail, head, a, b)
                    .map_err(|e| e.at_line(line))?;
            }
            "DEMAND" => {
                let [origin, dest, rate] = args[..] else {
                    return Err(parse_err(format!(
                        "DEMAND expects 3 fields (origin destination rate), found {}",
                        args.len()
                    )));
                };
                let rate = number::<T>(rate).map_err(parse_err)?;
                builder
                    .add_demand(origin, dest, rate)
                    .map_err(|e| e.at_line(line))?;
            }
            other => return Err(parse_err(format!("unknown keyword `{other}`"))),
        }
    }
    builder.finish()
}

impl<T: Scalar> FromStr for Network<T> {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        parse_network(s)
    }
}

fn number<T: Scalar>(tok: &str) -> std::result::Result<T, String> {
    let v: T = tok
        .parse()
        .map_err(|_| format!("`{tok}` is not a number"))?;
    if !v.is_finite() {
        return Err(format!("`{tok}` is not finite"));
    }
    Ok(v)
}

/// Either a structural problem tied to a source line or a validation error.
enum BuildError {
    Syntax(String),
    Invalid(Error),
}

impl BuildError {
    fn at_line(self, line: usize) -> Error {
        match self {
            BuildError::Syntax(message) => Error::Parse { line, message },
            BuildError::Invalid(e) => e,
        }
    }

    fn into_error(self) -> Error {
        match self {
            BuildError::Syntax(m) => Error::InvalidConfig(m),
            BuildError::Invalid(e) => e,
        }
    }
}

#[derive(Default)]
struct Builder<T> {
    nodes: Vec<String>,
    node_index: HashMap<String, usize>,
    edges: Vec<Edge<T>>,
    edge_keys: HashMap<(usize, usize), usize>,
    demands: Vec<Demand<T>>,
}

impl<T: Scalar> Builder<T> {
    fn add_node(&mut self, name: &str) -> std::result::Result<(), String> {
        if name.is_empty() || name.chars().any(char::is_whitespace) || name.contains('#') {
            return Err(format!("invalid node name `{name}`"));
        }
        if self.node_index.contains_key(name) {
            return Err(format!("node `{name}` declared twice"));
        }
        self.node_index.insert(name.to_owned(), self.nodes.len());
        self.nodes.push(name.to_owned());
        Ok(())
    }

    fn node(&self, name: &str) -> std::result::Result<usize, BuildError> {
        self.node_index
            .get(name)
            .copied()
            .ok_or_else(|| BuildError::Syntax(format!("unknown node `{name}`")))
    }

    fn add_edge(
        &mut self,
        tail: &str,
        head: &str,
        a: T,
        b: T,
    ) -> std::result::Result<(), BuildError> {
        let (t, h) = (self.node(tail)?, self.node(head)?);
        if t == h {
            return Err(BuildError::Syntax(format!("self-loop on node `{tail}`")));
        }
        for (name, value) in [("a", a), ("b", b)] {
            if !(value >= T::zero()) || !value.is_finite() {
                return Err(BuildError::Invalid(Error::NegativeParameter {
                    tail: tail.to_owned(),
                    head: head.to_owned(),
                    name,
                    value: value.as_f64(),
                }));
            }
        }
        if self.edge_keys.insert((t, h), self.edges.len()).is_some() {
            return Err(BuildError::Invalid(Error::DuplicateEdge {
                tail: tail.to_owned(),
                head: head.to_owned(),
            }));
        }
        self.edges.push(Edge {
            tail: t,
            head: h,
            a,
            b,
        });
        Ok(())
    }

    fn add_demand(
        &mut self,
        origin: &str,
        dest: &str,
        rate: T,
    ) -> std::result::Result<(), BuildError> {
        let (o, d) = (self.node(origin)?, self.node(dest)?);
        let invalid = |reason: &str| {
            BuildError::Invalid(Error::InvalidDemand {
                origin: origin.to_owned(),
                destination: dest.to_owned(),
                reason: reason.to_owned(),
            })
        };
        if !(rate >= T::zero()) || !rate.is_finite() {
            return Err(invalid("rate must be a finite nonnegative number"));
        }
        if self
            .demands
            .iter()
            .any(|x| x.origin == o && x.destination == d)
        {
            return Err(invalid("pair listed twice"));
        }
        if o == d {
            if rate > T::zero() {
                return Err(invalid("origin equals destination"));
            }
            return Ok(());
        }
        if rate > T::zero() {
            self.demands.push(Demand {
                origin: o,
                destination: d,
                rate,
            });
        }
        Ok(())
    }

    fn finish(mut self) -> Result<Network<T>> {
        let mut out_edges = vec![Vec::new(); self.nodes.len()];
        for (i, e) in self.edges.iter().enumerate() {
            out_edges[e.tail].push(i);
        }
        self.demands.sort_by_key(|d| (d.origin, d.destination));
        let net = Network {
            nodes: self.nodes,
            node_index: self.node_index,
            edges: self.edges,
            demands: self.demands,
            out_edges,
        };
        let mut cached: Option<(usize, Vec<bool>)> = None;
        for d in &net.demands {
            if cached.as_ref().map(|c| c.0) != Some(d.origin) {
                cached = Some((d.origin, net.reachable_from(d.origin)));
            }
            if !cached.as_ref().unwrap().1[d.destination] {
                return Err(net.demand_error(d));
            }
        }
        Ok(net)
    }
}

/// Nonnegative per-edge flow, in edge-list order.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowVector<T>(Vec<T>);

impl<T: Scalar> FlowVector<T> {
    pub fn new(values: Vec<T>) -> Result<Self> {
        if let Some((edge, v)) = values
            .iter()
            .enumerate()
            .find(|(_, v)| !(**v >= T::zero()) || !v.is_finite())
        {
            return Err(Error::NegativeFlow {
                edge,
                value: v.as_f64(),
            });
        }
        Ok(Self(values))
    }

    pub fn zeros(len: usize) -> Self {
        Self(vec![T::zero(); len])
    }

    /// Convex combination `(1 - step) * self + step * target`.
    pub fn toward(&self, target: &FlowVector<T>, step: T) -> Self {
        Self(
            self.0
                .iter()
                .zip(&target.0)
                .map(|(&x, &y)| (T::one() - step) * x + step * y)
                .collect(),
        )
    }

    pub fn as_slice(&self) -> &[T] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<T> {
        self.0
    }

    pub(crate) fn from_raw(values: Vec<T>) -> Self {
        Self(values)
    }

    /// Largest absolute componentwise difference.
    pub fn max_abs_diff(&self, other: &[T]) -> T {
        self.0
            .iter()
            .zip(other)
            .map(|(&x, &y)| (x - y).abs())
            .fold(T::zero(), T::max)
    }
}

impl<T> Deref for FlowVector<T> {
    type Target = [T];

    fn deref(&self) -> &[T] {
        &self.0
    }
}

/// A single routed OD pair.
#[derive(Debug, Clone, PartialEq)]
pub struct AssignedPath<T> {
    pub origin: usize,
    pub destination: usize,
    /// Edge indices from origin to destination.
    pub edges: Vec<usize>,
    pub demand: T,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct PathAssignment<T> {
    pub paths: Vec<AssignedPath<T>>,
}

impl<T> PathAssignment<T> {
    pub fn empty() -> Self {
        Self { paths: Vec::new() }
    }
}

/// Edge flow induced by routing each assigned demand along its path.
pub fn induced_edge_flow<T: Scalar>(
    assignment: &PathAssignment<T>,
    network: &Network<T>,
) -> Result<FlowVector<T>> {
    let mut flow = vec![T::zero(); network.edge_count()];
    for p in &assignment.paths {
        let mut at = p.origin;
        for &e in &p.edges {
            let edge = network
                .edges
                .get(e)
                .filter(|edge| edge.tail == at)
                .ok_or(Error::UnknownEdge { edge: e })?;
            flow[e] = flow[e] + p.demand;
            at = edge.head;
        }
        if at != p.destination {
            return Err(Error::UnknownEdge {
                edge: p.edges.last().copied().unwrap_or(usize::MAX),
            });
        }
    }
    FlowVector::new(flow)
}

/// Net outflow (out minus in) at every node.
pub fn net_outflow<T: Scalar>(x: &[T], network: &Network<T>) -> Vec<T> {
    let mut net = vec![T::zero(); network.node_count()];
    for (e, &f) in network.edges.iter().zip(x) {
        net[e.tail] = net[e.tail] + f;
        net[e.head] = net[e.head] - f;
    }
    net
}

/// Net outflow each node must have: demand it originates minus demand it attracts.
pub fn required_outflow<T: Scalar>(network: &Network<T>) -> Vec<T> {
    let mut req = vec![T::zero(); network.node_count()];
    for d in &network.demands {
        req[d.origin] = req[d.origin] + d.rate;
        req[d.destination] = req[d.destination] - d.rate;
    }
    req
}

#[derive(Debug, Clone, PartialEq)]
pub struct BalanceReport<T> {
    pub passed: bool,
    /// Per-node `net outflow - required outflow`.
    pub residuals: Vec<T>,
    pub max_residual: T,
}

impl<T: Scalar> BalanceReport<T> {
    /// Indices of nodes whose residual exceeded the tolerance.
    pub fn failing_nodes(&self, tol: T, scale: T) -> Vec<usize> {
        self.residuals
            .iter()
            .enumerate()
            .filter(|(_, r)| r.abs() > tol * scale)
            .map(|(i, _)| i)
            .collect()
    }
}

/// Checks node flow conservation of an aggregate edge flow. The tolerance is
/// relative to `max(1, total demand)`.
pub fn check_balance<T: Scalar>(x: &[T], network: &Network<T>, tol: T) -> Result<BalanceReport<T>> {
    network.check_dim(x.len())?;
    let net = net_outflow(x, network);
    let req = required_outflow(network);
    let residuals: Vec<T> = net.iter().zip(&req).map(|(&n, &r)| n - r).collect();
    let max_residual = residuals.iter().fold(T::zero(), |m, r| m.max(r.abs()));
    let scale = balance_scale(network);
    Ok(BalanceReport {
        passed: max_residual <= tol * scale,
        residuals,
        max_residual,
    })
}

pub fn balance_scale<T: Scalar>(network: &Network<T>) -> T {
    network.total_demand().max(T::one())
}

/// All simple paths from `origin` to `destination`, as edge sequences, in
/// depth-first order over ascending edge indices.
pub fn enumerate_paths<T: Scalar>(
    network: &Network<T>,
    origin: usize,
    destination: usize,
    cap: usize,
) -> Result<Vec<Vec<usize>>> {
    let mut paths = Vec::new();
    let mut on_path = vec![false; network.node_count()];
    let mut stack: Vec<usize> = Vec::new();
    on_path[origin] = true;
    let exceeded = || Error::PathLimitExceeded {
        origin: network.nodes[origin].clone(),
        destination: network.nodes[destination].clone(),
        cap,
    };
    // Iterative DFS over (node, next out-edge position) frames.
    let mut frames = vec![(origin, 0usize)];
    while let Some(&mut (node, ref mut pos)) = frames.last_mut() {
        if node == destination {
            if paths.len() == cap {
                return Err(exceeded());
            }
            paths.push(stack.clone());
            frames.pop();
            on_path[node] = false;
            stack.pop();
            continue;
        }
        let outs = network.out_edges(node);
        if *pos < outs.len() {
            let e = outs[*pos];
            *pos += 1;
            let next = network.edges[e].head;
            if !on_path[next] {
                on_path[next] = true;
                stack.push(e);
                frames.push((next, 0));
            }
        } else {
            frames.pop();
            on_path[node] = false;
            stack.pop();
        }
    }
    Ok(paths)
}

/// Per-edge upper bound on feasible flow: the total demand of OD pairs with
/// at least one simple path through the edge.
pub fn edge_flow_bounds<T: Scalar>(network: &Network<T>, cap: usize) -> Result<Vec<T>> {
    let mut bounds = vec![T::zero(); network.edge_count()];
    for d in &network.demands {
        let paths = enumerate_paths(network, d.origin, d.destination, cap)?;
        let mut used = vec![false; network.edge_count()];
        for p in &paths {
            for &e in p {
                used[e] = true;
            }
        }
        for (b, u) in bounds.iter_mut().zip(used) {
            if u {
                *b = *b + d.rate;
            }
        }
    }
    Ok(bounds)
}

/// Diameter bound of the feasible flow set: `2 * sqrt(sum_e K_e^2)`.
pub fn diameter_bound<T: Scalar>(network: &Network<T>, cap: usize) -> Result<T> {
    let k = edge_flow_bounds(network, cap)?;
    Ok(T::lit(2.0) * k.iter().map(|&v| v * v).sum::<T>().sqrt())
}
