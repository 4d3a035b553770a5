//! Extended η-Wasserstein distance between discrete measures.
//!
//! The distance is the value of the linear program
//!
//! ```text
//! sup { Σ h(x)(μ − ν)(x) : |h(x) − h(y)| ≤ d(x, y) }
//! ```
//!
//! over the union of the supports, with d(x, y) = min(|x − y|, |x − y|^η).
//! Since t ↦ min(t, t^η) is concave, increasing and vanishes at 0, d is a
//! metric, and the program is the dual of an uncapacitated transportation
//! problem. We solve that problem by successive shortest paths; the final
//! node potentials are an optimal dual h.
//!
//! Only two kinds of arcs are needed: neighbours in sorted order, and pairs
//! further than 1 apart. For pairs closer than 1 the cost is |x − y|, which
//! the chain of neighbours already realises.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use super::DiscreteMeasure;
use crate::error::{Error, Result};

/// min(t, t^η) for t ≥ 0.
pub fn eta_cost(t: f64, eta: f64) -> f64 {
    if t <= 1.0 {
        t
    } else {
        t.powf(eta)
    }
}

/// Optimal value together with the dual potentials on the merged support.
#[derive(Debug, Clone)]
pub struct TransportSolution {
    pub value: f64,
    pub support: Vec<f64>,
    pub potentials: Vec<f64>,
}

pub fn eta_wasserstein(mu: &DiscreteMeasure, nu: &DiscreteMeasure, eta: f64) -> Result<f64> {
    eta_wasserstein_solution(mu, nu, eta).map(|s| s.value)
}

pub fn eta_wasserstein_solution(
    mu: &DiscreteMeasure,
    nu: &DiscreteMeasure,
    eta: f64,
) -> Result<TransportSolution> {
    if !(eta > 0.0 && eta < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "η must lie in (0, 1), got {eta}"
        )));
    }
    let (support, supply) = signed_difference(mu, nu);
    let n = support.len();

    let mut graph = Graph::new(n);
    for i in 0..n.saturating_sub(1) {
        let cost = eta_cost(support[i + 1] - support[i], eta);
        graph.add_edge(i, i + 1, cost);
        graph.add_edge(i + 1, i, cost);
    }
    for i in 0..n {
        // first index at distance > 1 from support[i]
        let start = support
            .partition_point(|&x| x - support[i] <= 1.0)
            .max(i + 2);
        for j in start..n {
            let cost = eta_cost(support[j] - support[i], eta);
            graph.add_edge(i, j, cost);
            graph.add_edge(j, i, cost);
        }
    }

    let potentials = graph.min_cost_flow(supply.clone());
    let value = graph.cost();
    let dual: f64 = supply.iter().zip(&potentials).map(|(b, p)| -b * p).sum();
    debug_assert!(
        (dual - value).abs() <= 1e-9 * (1.0 + value.abs()),
        "primal {value} and dual {dual} disagree"
    );
    Ok(TransportSolution {
        value: value.max(0.0),
        support,
        potentials: potentials.iter().map(|p| -p).collect(),
    })
}

/// Merged support and μ − ν on it.
fn signed_difference(mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> (Vec<f64>, Vec<f64>) {
    let mut merged: Vec<(f64, f64)> = mu.iter().chain(nu.iter().map(|(a, w)| (a, -w))).collect();
    merged.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut support: Vec<f64> = Vec::with_capacity(merged.len());
    let mut supply: Vec<f64> = Vec::with_capacity(merged.len());
    for (a, w) in merged {
        if support.last() == Some(&a) {
            *supply.last_mut().unwrap() += w;
        } else {
            support.push(a);
            supply.push(w);
        }
    }
    (support, supply)
}

struct Edge {
    to: usize,
    cost: f64,
    flow: f64,
    rev: usize,
    forward: bool,
}

struct Graph {
    adj: Vec<Vec<Edge>>,
}

#[derive(PartialEq)]
struct HeapItem(f64, usize);

impl Eq for HeapItem {}

impl PartialOrd for HeapItem {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for HeapItem {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .0
            .total_cmp(&self.0)
            .then_with(|| other.1.cmp(&self.1))
    }
}

const EXCESS_EPS: f64 = 1e-14;

impl Graph {
    fn new(n: usize) -> Self {
        Self {
            adj: (0..n).map(|_| Vec::new()).collect(),
        }
    }

    fn add_edge(&mut self, from: usize, to: usize, cost: f64) {
        let rev_from = self.adj[to].len();
        let rev_to = self.adj[from].len();
        self.adj[from].push(Edge {
            to,
            cost,
            flow: 0.0,
            rev: rev_from,
            forward: true,
        });
        self.adj[to].push(Edge {
            to: from,
            cost: -cost,
            flow: 0.0,
            rev: rev_to,
            forward: false,
        });
    }

    fn residual(e: &Edge) -> f64 {
        if e.forward {
            f64::INFINITY
        } else {
            e.flow
        }
    }

    /// Routes `supply` (positive = source) at minimum cost and returns the
    /// node potentials π with reduced costs c + π_u − π_v ≥ 0.
    fn min_cost_flow(&mut self, mut excess: Vec<f64>) -> Vec<f64> {
        let n = self.adj.len();
        let mut potential = vec![0.0; n];
        let mut dist = vec![f64::INFINITY; n];
        let mut parent: Vec<Option<(usize, usize)>> = vec![None; n];

        loop {
            let sources: Vec<usize> = (0..n).filter(|&v| excess[v] > EXCESS_EPS).collect();
            if sources.is_empty() {
                break;
            }
            dist.fill(f64::INFINITY);
            parent.fill(None);
            let mut heap = BinaryHeap::new();
            for &s in &sources {
                dist[s] = 0.0;
                heap.push(HeapItem(0.0, s));
            }
            let mut target = None;
            while let Some(HeapItem(d, v)) = heap.pop() {
                if d > dist[v] {
                    continue;
                }
                if excess[v] < -EXCESS_EPS {
                    target = Some(v);
                    break;
                }
                for (k, e) in self.adj[v].iter().enumerate() {
                    if Self::residual(e) <= 0.0 {
                        continue;
                    }
                    let reduced = (e.cost + potential[v] - potential[e.to]).max(0.0);
                    let nd = d + reduced;
                    if nd < dist[e.to] {
                        dist[e.to] = nd;
                        parent[e.to] = Some((v, k));
                        heap.push(HeapItem(nd, e.to));
                    }
                }
            }
            let Some(t) = target else { break };
            let dt = dist[t];
            for v in 0..n {
                potential[v] += dist[v].min(dt);
            }

            let mut bottleneck = -excess[t];
            let mut v = t;
            while let Some((u, k)) = parent[v] {
                bottleneck = bottleneck.min(Self::residual(&self.adj[u][k]));
                v = u;
            }
            bottleneck = bottleneck.min(excess[v]);

            let mut v = t;
            while let Some((u, k)) = parent[v] {
                let rev = self.adj[u][k].rev;
                if self.adj[u][k].forward {
                    self.adj[u][k].flow += bottleneck;
                    self.adj[v][rev].flow += bottleneck;
                } else {
                    self.adj[u][k].flow -= bottleneck;
                    self.adj[v][rev].flow -= bottleneck;
                }
                v = u;
            }
            excess[v] -= bottleneck;
            excess[t] += bottleneck;
        }
        potential
    }

    fn cost(&self) -> f64 {
        self.adj
            .iter()
            .flat_map(|edges| edges.iter())
            .filter(|e| e.forward)
            .map(|e| e.flow * e.cost)
            .sum()
    }
}
