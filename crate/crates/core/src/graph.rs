//! Undirected literal graph: two free variables are adjacent iff they occur
//! together in at least one clause. Distances are unweighted shortest paths.

use std::collections::VecDeque;

use crate::cnf::ClauseSystem;
use crate::error::{Error, Result};

const UNREACHABLE: u32 = u32::MAX;

#[derive(Clone, Debug)]
pub struct LiteralGraph {
    /// Graph vertices as variable indices, ascending.
    vertices: Vec<usize>,
    /// Variable index -> vertex slot.
    slot: Vec<Option<usize>>,
    adjacency: Vec<Vec<usize>>,
    /// Row-major all-pairs distances between slots.
    dist: Vec<u32>,
    diameter: usize,
}

pub fn literal_graph(cs: &ClauseSystem) -> LiteralGraph {
    let vertices = cs.free_vars();
    let mut slot = vec![None; cs.num_vars];
    for (k, &v) in vertices.iter().enumerate() {
        slot[v] = Some(k);
    }
    let n = vertices.len();
    let mut adjacency: Vec<Vec<usize>> = vec![Vec::new(); n];
    for clause in &cs.clauses {
        let members: Vec<usize> = clause.iter().filter_map(|l| slot[l.var]).collect();
        for (i, &a) in members.iter().enumerate() {
            for &b in &members[i + 1..] {
                if a != b {
                    adjacency[a].push(b);
                    adjacency[b].push(a);
                }
            }
        }
    }
    for adj in &mut adjacency {
        adj.sort_unstable();
        adj.dedup();
    }

    let mut dist = vec![UNREACHABLE; n * n];
    let mut queue = VecDeque::new();
    for src in 0..n {
        let row = &mut dist[src * n..(src + 1) * n];
        row[src] = 0;
        queue.push_back(src);
        while let Some(u) = queue.pop_front() {
            let du = row[u];
            for &w in &adjacency[u] {
                if row[w] == UNREACHABLE {
                    row[w] = du + 1;
                    queue.push_back(w);
                }
            }
        }
    }
    let diameter = dist
        .iter()
        .filter(|&&d| d != UNREACHABLE)
        .max()
        .copied()
        .unwrap_or(0) as usize;

    LiteralGraph {
        vertices,
        slot,
        adjacency,
        dist,
        diameter,
    }
}

impl LiteralGraph {
    pub fn vertices(&self) -> &[usize] {
        &self.vertices
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn diameter(&self) -> usize {
        self.diameter
    }

    pub fn contains(&self, var: usize) -> bool {
        self.slot.get(var).is_some_and(|s| s.is_some())
    }

    fn slot_of(&self, var: usize) -> Result<usize> {
        self.slot
            .get(var)
            .copied()
            .flatten()
            .ok_or(Error::UnknownVertex(var))
    }

    /// Neighbouring variables of `var`.
    pub fn neighbors(&self, var: usize) -> Result<Vec<usize>> {
        let s = self.slot_of(var)?;
        Ok(self.adjacency[s].iter().map(|&k| self.vertices[k]).collect())
    }

    pub fn has_edge(&self, a: usize, b: usize) -> Result<bool> {
        let (sa, sb) = (self.slot_of(a)?, self.slot_of(b)?);
        Ok(self.adjacency[sa].binary_search(&sb).is_ok())
    }

    /// Shortest-path length; `None` when `b` is unreachable from `a`.
    pub fn distance(&self, a: usize, b: usize) -> Result<Option<usize>> {
        let (sa, sb) = (self.slot_of(a)?, self.slot_of(b)?);
        Ok(self.slot_distance(sa, sb))
    }

    fn slot_distance(&self, sa: usize, sb: usize) -> Option<usize> {
        let d = self.dist[sa * self.len() + sb];
        (d != UNREACHABLE).then_some(d as usize)
    }

    /// All vertex pairs `(a, b)` with `a < b`, as variable indices, grouped by
    /// distance. Index `d` of the result holds the pairs at distance `d`.
    pub fn pairs_by_distance(&self) -> Vec<Vec<(usize, usize)>> {
        let mut out: Vec<Vec<(usize, usize)>> = vec![Vec::new(); self.diameter + 1];
        for i in 0..self.len() {
            for j in i + 1..self.len() {
                if let Some(d) = self.slot_distance(i, j) {
                    out[d].push((self.vertices[i], self.vertices[j]));
                }
            }
        }
        out
    }

    /// One explicit shortest path from `a` to `b`, both endpoints included.
    pub fn shortest_path(&self, a: usize, b: usize) -> Result<Option<Vec<usize>>> {
        let (sa, sb) = (self.slot_of(a)?, self.slot_of(b)?);
        let Some(mut remaining) = self.slot_distance(sa, sb) else {
            return Ok(None);
        };
        // Walk back from b along strictly decreasing distance to a.
        let mut path = vec![sb];
        let mut cur = sb;
        while remaining > 0 {
            cur = *self.adjacency[cur]
                .iter()
                .find(|&&w| self.slot_distance(sa, w) == Some(remaining - 1))
                .expect("BFS layers are consistent");
            path.push(cur);
            remaining -= 1;
        }
        path.reverse();
        Ok(Some(path.into_iter().map(|s| self.vertices[s]).collect()))
    }
}

/// Breadth-first distance between two graph vertices.
pub fn graph_distance(g: &LiteralGraph, a: usize, b: usize) -> Result<Option<usize>> {
    g.distance(a, b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cnf::{encode_cnf, Lit};
    use crate::netlist::build_multiplier;
    use proptest::prelude::*;

    fn toy() -> ClauseSystem {
        // (x0 v x1) (x1 v ~x2) (x3 v x4), x5 fixed
        ClauseSystem {
            num_vars: 6,
            clauses: vec![
                vec![Lit::pos(0), Lit::pos(1)],
                vec![Lit::pos(1), Lit::neg(2)],
                vec![Lit::pos(3), Lit::pos(4), Lit::neg(5)],
            ],
            units: vec![None, None, None, None, None, Some(true)],
            node_map: (0..6).map(|v| format!("x{v}")).collect(),
        }
    }

    #[test]
    fn basic_distances() {
        let g = literal_graph(&toy());
        assert_eq!(g.distance(0, 1).unwrap(), Some(1));
        assert_eq!(g.distance(2, 2).unwrap(), Some(0));
        assert_eq!(g.distance(0, 2).unwrap(), Some(2));
        assert_eq!(g.distance(0, 3).unwrap(), None);
        assert_eq!(g.diameter(), 2);
    }

    #[test]
    fn units_are_not_vertices() {
        let g = literal_graph(&toy());
        assert!(!g.contains(5));
        assert!(matches!(g.distance(0, 5), Err(Error::UnknownVertex(5))));
        assert!(matches!(g.distance(0, 99), Err(Error::UnknownVertex(99))));
        assert_eq!(g.neighbors(3).unwrap(), vec![4]);
    }

    #[test]
    fn multiplier_graph_is_connected() {
        let cs = encode_cnf(&build_multiplier(4, 4).unwrap(), 143).unwrap();
        let g = literal_graph(&cs);
        let v = g.vertices().to_vec();
        for &a in &v {
            for &b in &v {
                assert!(g.distance(a, b).unwrap().is_some());
            }
        }
        assert!(g.diameter() >= 3);
    }

    proptest! {
        #[test]
        fn metric_properties(pw in 2usize..5, qw in 2usize..5, seed in 0u64..1000) {
            let net = build_multiplier(pw, qw).unwrap();
            let n = (1u64 << (pw + qw - 1)) | 1 | (seed % (1u64 << (pw + qw - 1)));
            let cs = encode_cnf(&net, n).unwrap();
            let g = literal_graph(&cs);
            let v = g.vertices().to_vec();
            let pick = |k: u64| v[(k as usize) % v.len()];
            let (a, b, c) = (pick(seed), pick(seed / 7 + 3), pick(seed / 13 + 11));
            prop_assert_eq!(g.has_edge(a, b).unwrap(), g.has_edge(b, a).unwrap());
            let dab = g.distance(a, b).unwrap().unwrap();
            prop_assert_eq!(Some(dab), g.distance(b, a).unwrap());
            let dbc = g.distance(b, c).unwrap().unwrap();
            let dac = g.distance(a, c).unwrap().unwrap();
            prop_assert!(dac <= dab + dbc);
            prop_assert_eq!(g.distance(a, a).unwrap(), Some(0));
            let path = g.shortest_path(a, b).unwrap().unwrap();
            prop_assert_eq!(path.len(), dab + 1);
            prop_assert_eq!(path[0], a);
            prop_assert_eq!(*path.last().unwrap(), b);
            for w in path.windows(2) {
                prop_assert!(g.has_edge(w[0], w[1]).unwrap());
            }
        }
    }
}
