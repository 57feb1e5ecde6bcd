use std::cmp::Ordering;
use std::collections::BinaryHeap;

use super::{Roadmap, Status};
use crate::geometry::{segment_cost, CostExponent};

#[derive(Debug, Clone, Copy)]
struct Entry {
    f: f64,
    g: f64,
    v: usize,
}

impl PartialEq for Entry {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Entry {}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Entry {
    // reversed: BinaryHeap is a max-heap, we pop the smallest (f, g, id)
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .f
            .total_cmp(&self.f)
            .then(other.g.total_cmp(&self.g))
            .then(other.v.cmp(&self.v))
    }
}

/// A* over every vertex and edge not known invalid.
///
/// Returns the vertex sequence and the edge ids along it.
pub(super) fn astar(rm: &Roadmap, start: usize, goal: usize) -> Option<(Vec<usize>, Vec<usize>)> {
    let n = rm.vertices.len();
    let goal_state = rm.vertices[goal].state;
    // a straight segment bounds any path from below only for the linear cost
    let linear = rm.weights.exponent() == CostExponent::Linear;
    let h = |v: usize| {
        if linear {
            segment_cost(&rm.vertices[v].state, &goal_state, &rm.weights)
        } else {
            0.0
        }
    };

    let mut g = vec![f64::INFINITY; n];
    let mut parent: Vec<Option<(usize, usize)>> = vec![None; n];
    let mut closed = vec![false; n];
    let mut open = BinaryHeap::new();
    g[start] = 0.0;
    open.push(Entry {
        f: h(start),
        g: 0.0,
        v: start,
    });

    while let Some(Entry { g: gv, v, .. }) = open.pop() {
        if closed[v] || gv > g[v] {
            continue;
        }
        if v == goal {
            let mut vertices = vec![goal];
            let mut edges = Vec::new();
            let mut cur = goal;
            while let Some((p, e)) = parent[cur] {
                vertices.push(p);
                edges.push(e);
                cur = p;
            }
            vertices.reverse();
            edges.reverse();
            return Some((vertices, edges));
        }
        closed[v] = true;
        for &e in &rm.vertices[v].edges {
            let edge = &rm.edges[e];
            let u = edge.other(v);
            if closed[u] || rm.vertices[u].status == Status::Invalid {
                continue;
            }
            let cand = gv + edge.cost;
            if cand < g[u] {
                g[u] = cand;
                parent[u] = Some((v, e));
                open.push(Entry {
                    f: cand + h(u),
                    g: cand,
                    v: u,
                });
            }
        }
    }
    None
}
