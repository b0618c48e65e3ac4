//! Dijkstra shortest paths and all-or-nothing assignment, the linear
//! minimization step of Frank-Wolfe over the demand polytope.
//!
//! Ties are broken deterministically: among equal-distance nodes the smaller
//! node index is settled first, and a node's predecessor only changes on a
//! strictly shorter candidate, so the first-found (lowest edge index along
//! the settle order) path wins.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};
use crate::network::{induced_edge_flow, AssignedPath, FlowVector, Network, PathAssignment};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq)]
pub struct ShortestPathTree<T> {
    pub origin: usize,
    /// Edge entering each node on its shortest path; `None` for the origin
    /// and unreachable nodes.
    pub pred_edge: Vec<Option<usize>>,
    /// Distance from the origin; infinite when unreachable.
    pub dist: Vec<T>,
}

impl<T: Scalar> ShortestPathTree<T> {
    pub fn is_reachable(&self, node: usize) -> bool {
        self.dist[node].is_finite()
    }

    /// Edge sequence from the origin to `node`, or `None` if unreachable.
    pub fn path_to(&self, network: &Network<T>, node: usize) -> Option<Vec<usize>> {
        if !self.is_reachable(node) {
            return None;
        }
        let mut edges = Vec::new();
        let mut at = node;
        while let Some(e) = self.pred_edge[at] {
            edges.push(e);
            at = network.edge(e).tail;
        }
        edges.reverse();
        Some(edges)
    }
}

struct Entry<T> {
    dist: T,
    node: usize,
}

impl<T: Scalar> PartialEq for Entry<T> {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl<T: Scalar> Eq for Entry<T> {}

impl<T: Scalar> PartialOrd for Entry<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<T: Scalar> Ord for Entry<T> {
    // Reversed for a min-heap; distances are finite and nonnegative.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .dist
            .partial_cmp(&self.dist)
            .unwrap_or(Ordering::Equal)
            .then_with(|| other.node.cmp(&self.node))
    }
}

fn check_costs<T: Scalar>(network: &Network<T>, costs: &[T]) -> Result<()> {
    network.check_dim(costs.len())?;
    if let Some((edge, &c)) = costs
        .iter()
        .enumerate()
        .find(|(_, c)| !(**c >= T::zero()) || !c.is_finite())
    {
        return Err(Error::NegativeCost {
            edge,
            value: c.as_f64(),
        });
    }
    Ok(())
}

pub fn dijkstra<T: Scalar>(
    network: &Network<T>,
    costs: &[T],
    origin: usize,
) -> Result<ShortestPathTree<T>> {
    check_costs(network, costs)?;
    Ok(dijkstra_unchecked(network, costs, origin))
}

fn dijkstra_unchecked<T: Scalar>(
    network: &Network<T>,
    costs: &[T],
    origin: usize,
) -> ShortestPathTree<T> {
    let n = network.node_count();
    let mut dist = vec![T::infinity(); n];
    let mut pred_edge = vec![None; n];
    let mut settled = vec![false; n];
    let mut heap = BinaryHeap::new();
    dist[origin] = T::zero();
    heap.push(Entry {
        dist: T::zero(),
        node: origin,
    });
    while let Some(Entry { dist: d, node: u }) = heap.pop() {
        if settled[u] {
            continue;
        }
        settled[u] = true;
        for &e in network.out_edges(u) {
            let v = network.edge(e).head;
            if settled[v] {
                continue;
            }
            let candidate = d + costs[e];
            if candidate < dist[v] {
                dist[v] = candidate;
                pred_edge[v] = Some(e);
                heap.push(Entry {
                    dist: candidate,
                    node: v,
                });
            }
        }
    }
    ShortestPathTree {
        origin,
        pred_edge,
        dist,
    }
}

/// Routes every positive demand entirely onto its current shortest path.
/// Returns the induced edge flow and the path assignment.
pub fn all_or_nothing<T: Scalar>(
    network: &Network<T>,
    costs: &[T],
) -> Result<(FlowVector<T>, PathAssignment<T>)> {
    check_costs(network, costs)?;
    let mut assignment = PathAssignment::empty();
    let mut tree: Option<ShortestPathTree<T>> = None;
    for d in network.demands() {
        if tree.as_ref().map(|t| t.origin) != Some(d.origin) {
            tree = Some(dijkstra_unchecked(network, costs, d.origin));
        }
        let edges = tree
            .as_ref()
            .and_then(|t| t.path_to(network, d.destination))
            .ok_or_else(|| network.demand_error(d))?;
        assignment.paths.push(AssignedPath {
            origin: d.origin,
            destination: d.destination,
            edges,
            demand: d.rate,
        });
    }
    let flow = induced_edge_flow(&assignment, network)?;
    Ok((flow, assignment))
}

/// Edge flow of the all-or-nothing vertex only. Demands are accumulated
/// directly along the shortest path trees.
pub(crate) fn aon_flow<T: Scalar>(network: &Network<T>, costs: &[T]) -> Result<FlowVector<T>> {
    check_costs(network, costs)?;
    let mut flow = vec![T::zero(); network.edge_count()];
    let mut tree: Option<ShortestPathTree<T>> = None;
    for d in network.demands() {
        if tree.as_ref().map(|t| t.origin) != Some(d.origin) {
            tree = Some(dijkstra_unchecked(network, costs, d.origin));
        }
        let t = tree.as_ref().unwrap();
        if !t.is_reachable(d.destination) {
            return Err(network.demand_error(d));
        }
        let mut at = d.destination;
        while let Some(e) = t.pred_edge[at] {
            flow[e] = flow[e] + d.rate;
            at = network.edge(e).tail;
        }
    }
    Ok(FlowVector::from_raw(flow))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::{check_balance, parse_network};

    const FIG1: &str = include_str!("../../../examples/paper_fig1.net");

    fn fig1() -> Network<f64> {
        parse_network(FIG1).unwrap()
    }

    #[test]
    fn zero_flow_costs_prefer_upper_path() {
        let n = fig1();
        let t = dijkstra(&n, &[0.3, 0.3, 0.5, 0.5], 0).unwrap();
        let d = n.node_id("D").unwrap();
        assert!((t.dist[d] - 0.6).abs() < 1e-15);
        assert_eq!(t.path_to(&n, d), Some(vec![0, 1]));
        assert_eq!(t.dist[0], 0.0);
    }

    #[test]
    fn equal_costs_pick_lower_edge_index_path() {
        let n = fig1();
        let t = dijkstra(&n, &[1.0; 4], 0).unwrap();
        assert_eq!(t.path_to(&n, 3), Some(vec![0, 1]));
    }

    #[test]
    fn sink_origin_reaches_nothing() {
        let n = fig1();
        let t = dijkstra(&n, &[1.0; 4], 3).unwrap();
        for v in 0..3 {
            assert!(t.dist[v].is_infinite());
            assert_eq!(t.path_to(&n, v), None);
        }
    }

    #[test]
    fn negative_costs_rejected() {
        let n = fig1();
        assert!(matches!(
            dijkstra(&n, &[1.0, -1.0, 1.0, 1.0], 0),
            Err(Error::NegativeCost { edge: 1, .. })
        ));
        assert!(matches!(
            dijkstra(&n, &[1.0; 3], 0),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn all_or_nothing_vertices() {
        let n = fig1();
        let (y, a) = all_or_nothing(&n, &[0.3, 0.3, 0.5, 0.5]).unwrap();
        assert_eq!(y.as_slice(), &[1.0, 1.0, 0.0, 0.0]);
        assert_eq!(a.paths.len(), 1);
        assert_eq!(a.paths[0].edges, vec![0, 1]);
        assert!(check_balance(&y, &n, 1e-12).unwrap().passed);

        let (y, _) = all_or_nothing(&n, &[10.0, 10.0, 0.5, 0.5]).unwrap();
        assert_eq!(y.as_slice(), &[0.0, 0.0, 1.0, 1.0]);
        assert_eq!(aon_flow(&n, &[10.0, 10.0, 0.5, 0.5]).unwrap(), y);
    }

    #[test]
    fn zero_demand_gives_zero_vertex() {
        let n: Network<f64> = "NODES A B\nEDGE A B 1 1\n".parse().unwrap();
        let (y, a) = all_or_nothing(&n, &[1.0]).unwrap();
        assert_eq!(y.as_slice(), &[0.0]);
        assert!(a.paths.is_empty());
    }

    #[test]
    fn shared_origin_reuses_tree() {
        let n: Network<f64> =
            "NODES A B C\nEDGE A B 1 0\nEDGE B C 1 0\nEDGE A C 5 0\nDEMAND A B 2\nDEMAND A C 1\n"
                .parse()
                .unwrap();
        let (y, a) = all_or_nothing(&n, &[1.0, 1.0, 5.0]).unwrap();
        assert_eq!(y.as_slice(), &[3.0, 1.0, 0.0]);
        assert_eq!(a.paths.len(), 2);
        assert!(check_balance(&y, &n, 1e-12).unwrap().passed);
    }
}
