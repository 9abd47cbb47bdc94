//! Min-cost flow by successive shortest augmenting paths with Johnson
//! potentials. Capacities are real; costs are integers, so Dijkstra on reduced
//! costs is exact.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

const UNREACHED: i64 = i64::MAX / 4;

#[derive(Clone, Debug)]
struct Edge {
    to: usize,
    cap: f64,
    cost: i64,
}

#[derive(Clone, Debug)]
pub struct MinCostFlow {
    adj: Vec<Vec<usize>>,
    edges: Vec<Edge>,
    /// Residual capacities below this are treated as saturated.
    eps: f64,
}

impl MinCostFlow {
    pub fn new(nodes: usize) -> Self {
        MinCostFlow {
            adj: vec![Vec::new(); nodes],
            edges: Vec::new(),
            eps: 1e-12,
        }
    }

    pub fn set_tolerance(&mut self, eps: f64) {
        self.eps = eps;
    }

    /// Adds `u → v`; returns the id of the forward edge. The reverse edge is
    /// `id ^ 1`.
    pub fn add_edge(&mut self, u: usize, v: usize, cap: f64, cost: i64) -> usize {
        let id = self.edges.len();
        self.edges.push(Edge { to: v, cap, cost });
        self.edges.push(Edge { to: u, cap: 0.0, cost: -cost });
        self.adj[u].push(id);
        self.adj[v].push(id + 1);
        id
    }

    /// Flow currently carried by forward edge `id`.
    pub fn flow(&self, id: usize) -> f64 {
        self.edges[id ^ 1].cap
    }

    fn initial_potentials(&self, source: usize) -> Vec<i64> {
        // Bellman-Ford over edges with residual capacity; handles negative costs.
        let n = self.adj.len();
        let mut pot = vec![UNREACHED; n];
        pot[source] = 0;
        for _ in 0..n {
            let mut changed = false;
            for u in 0..n {
                if pot[u] == UNREACHED {
                    continue;
                }
                for &e in &self.adj[u] {
                    let edge = &self.edges[e];
                    if edge.cap > self.eps && pot[u] + edge.cost < pot[edge.to] {
                        pot[edge.to] = pot[u] + edge.cost;
                        changed = true;
                    }
                }
            }
            if !changed {
                break;
            }
        }
        pot
    }

    /// Pushes up to `limit` units from `source` to `sink` along cheapest
    /// paths. Returns the amount pushed and its total cost in integer cost units.
    pub fn run(&mut self, source: usize, sink: usize, limit: f64) -> (f64, f64) {
        let n = self.adj.len();
        let mut pot = self.initial_potentials(source);
        let mut pushed = 0.0;
        let mut total_cost = 0.0;
        let mut dist = vec![UNREACHED; n];
        let mut prev_edge = vec![usize::MAX; n];
        while limit - pushed > self.eps {
            dist.fill(UNREACHED);
            prev_edge.fill(usize::MAX);
            dist[source] = 0;
            let mut heap = BinaryHeap::new();
            heap.push(Reverse((0i64, source)));
            while let Some(Reverse((d, u))) = heap.pop() {
                if d > dist[u] {
                    continue;
                }
                for &e in &self.adj[u] {
                    let edge = &self.edges[e];
                    if edge.cap <= self.eps || pot[edge.to] == UNREACHED {
                        continue;
                    }
                    // reduced costs are non-negative up to unreached nodes
                    let rc = (edge.cost + pot[u] - pot[edge.to]).max(0);
                    let nd = d + rc;
                    if nd < dist[edge.to] {
                        dist[edge.to] = nd;
                        prev_edge[edge.to] = e;
                        heap.push(Reverse((nd, edge.to)));
                    }
                }
            }
            if dist[sink] == UNREACHED {
                break;
            }
            for v in 0..n {
                if dist[v] != UNREACHED && pot[v] != UNREACHED {
                    pot[v] += dist[v];
                }
            }
            let mut bottleneck = limit - pushed;
            let mut v = sink;
            while v != source {
                let e = prev_edge[v];
                bottleneck = bottleneck.min(self.edges[e].cap);
                v = self.edges[e ^ 1].to;
            }
            let mut path_cost: i128 = 0;
            let mut v = sink;
            while v != source {
                let e = prev_edge[v];
                self.edges[e].cap -= bottleneck;
                if self.edges[e].cap < self.eps {
                    self.edges[e].cap = 0.0;
                }
                self.edges[e ^ 1].cap += bottleneck;
                path_cost += self.edges[e].cost as i128;
                v = self.edges[e ^ 1].to;
            }
            pushed += bottleneck;
            total_cost += bottleneck * path_cost as f64;
        }
        (pushed, total_cost)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_paths_prefers_cheaper() {
        // s=0, a=1, b=2, t=3
        let mut g = MinCostFlow::new(4);
        let sa = g.add_edge(0, 1, 1.0, 1);
        let sb = g.add_edge(0, 2, 1.0, 5);
        g.add_edge(1, 3, 1.0, 1);
        g.add_edge(2, 3, 1.0, 1);
        let (f, c) = g.run(0, 3, 1.5);
        assert!((f - 1.5).abs() < 1e-12);
        assert!((c - 5.0).abs() < 1e-9);
        assert!((g.flow(sa) - 1.0).abs() < 1e-12);
        assert!((g.flow(sb) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn shared_bottleneck_forces_expensive_path() {
        // b→t is shared, so one unit must take the expensive a→t edge
        // s=0, a=1, b=2, t=3
        let mut g = MinCostFlow::new(4);
        g.add_edge(0, 1, 1.0, 0);
        g.add_edge(0, 2, 1.0, 0);
        g.add_edge(1, 3, 1.0, 10);
        g.add_edge(1, 2, 1.0, 1);
        g.add_edge(2, 3, 1.0, 1);
        let (f, c) = g.run(0, 3, 2.0);
        assert!((f - 2.0).abs() < 1e-12);
        assert!((c - 11.0).abs() < 1e-9);
    }

    #[test]
    fn negative_costs_start_from_bellman_ford() {
        let mut g = MinCostFlow::new(3);
        g.add_edge(0, 1, 2.0, -4);
        g.add_edge(1, 2, 1.0, 1);
        g.add_edge(1, 2, 1.0, 3);
        let (f, c) = g.run(0, 2, f64::INFINITY);
        assert!((f - 2.0).abs() < 1e-12);
        assert!((c + 4.0).abs() < 1e-9);
    }
}
