//! Interaction graphs and strong connectivity.

use std::collections::BTreeSet;

use serde::Serialize;

/// Directed graph on vertices `0..n` without self-loops.
///
/// An arc `(i, j)` means `j` is an outgoing neighbor of `i`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DirectedGraph {
    n: usize,
    out: Vec<BTreeSet<usize>>,
}

impl DirectedGraph {
    pub fn empty(n: usize) -> Self {
        Self {
            n,
            out: vec![BTreeSet::new(); n],
        }
    }

    pub fn from_arcs(n: usize, arcs: impl IntoIterator<Item = (usize, usize)>) -> Self {
        let mut g = Self::empty(n);
        for (i, j) in arcs {
            g.add_arc(i, j);
        }
        g
    }

    /// Adds `i -> j`. Self-loops are ignored.
    pub fn add_arc(&mut self, i: usize, j: usize) {
        assert!(i < self.n && j < self.n, "arc ({i}, {j}) out of range");
        if i != j {
            self.out[i].insert(j);
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn has_arc(&self, i: usize, j: usize) -> bool {
        self.out[i].contains(&j)
    }

    /// Arcs in lexicographic order.
    pub fn arcs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.out
            .iter()
            .enumerate()
            .flat_map(|(i, s)| s.iter().map(move |&j| (i, j)))
    }

    pub fn arc_count(&self) -> usize {
        self.out.iter().map(BTreeSet::len).sum()
    }

    pub fn out_neighbors(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        self.out[i].iter().copied()
    }

    pub fn out_degree(&self, i: usize) -> usize {
        self.out[i].len()
    }

    pub fn in_degree(&self, j: usize) -> usize {
        self.out.iter().filter(|s| s.contains(&j)).count()
    }

    /// Merges the arcs of `other` into `self`.
    pub fn union_with(&mut self, other: &DirectedGraph) {
        assert_eq!(self.n, other.n, "graphs differ in vertex count");
        for (dst, src) in self.out.iter_mut().zip(&other.out) {
            dst.extend(src.iter().copied());
        }
    }

    /// Strongly connected components via an iterative Tarjan traversal.
    ///
    /// Components come out in reverse topological order of the condensation.
    pub fn strongly_connected_components(&self) -> Vec<Vec<usize>> {
        const UNVISITED: usize = usize::MAX;
        let adj: Vec<Vec<usize>> = self
            .out
            .iter()
            .map(|s| s.iter().copied().collect())
            .collect();
        let mut index = vec![UNVISITED; self.n];
        let mut lowlink = vec![0; self.n];
        let mut on_stack = vec![false; self.n];
        let mut stack = Vec::new();
        let mut sccs = Vec::new();
        let mut counter = 0;

        for root in 0..self.n {
            if index[root] != UNVISITED {
                continue;
            }
            // (vertex, position of the next neighbor to explore)
            let mut call_stack = vec![(root, 0usize)];
            index[root] = counter;
            lowlink[root] = counter;
            counter += 1;
            stack.push(root);
            on_stack[root] = true;

            while let Some(&mut (v, ref mut next)) = call_stack.last_mut() {
                if let Some(&w) = adj[v].get(*next) {
                    *next += 1;
                    if index[w] == UNVISITED {
                        index[w] = counter;
                        lowlink[w] = counter;
                        counter += 1;
                        stack.push(w);
                        on_stack[w] = true;
                        call_stack.push((w, 0));
                    } else if on_stack[w] {
                        lowlink[v] = lowlink[v].min(index[w]);
                    }
                    continue;
                }

                call_stack.pop();
                if let Some(&(parent, _)) = call_stack.last() {
                    lowlink[parent] = lowlink[parent].min(lowlink[v]);
                }
                if lowlink[v] == index[v] {
                    let mut scc = Vec::new();
                    loop {
                        let w = stack.pop().expect("tarjan stack underflow");
                        on_stack[w] = false;
                        scc.push(w);
                        if w == v {
                            break;
                        }
                    }
                    scc.sort_unstable();
                    sccs.push(scc);
                }
            }
        }
        sccs
    }

    /// True iff the graph has exactly one SCC and it spans every vertex.
    pub fn is_strongly_connected(&self) -> bool {
        let sccs = self.strongly_connected_components();
        sccs.len() == 1 && sccs[0].len() == self.n
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn chain_has_singleton_components() {
        let g = DirectedGraph::from_arcs(3, [(0, 1), (1, 2)]);
        let sccs = g.strongly_connected_components();
        assert_eq!(sccs.len(), 3);
        assert!(!g.is_strongly_connected());
    }

    #[test]
    fn cycle_is_strongly_connected() {
        let g = DirectedGraph::from_arcs(3, [(0, 1), (1, 2), (2, 0)]);
        assert!(g.is_strongly_connected());
    }

    #[test]
    fn two_cycles_joined_one_way() {
        let g = DirectedGraph::from_arcs(4, [(0, 1), (1, 0), (2, 3), (3, 2), (1, 2)]);
        let mut sccs = g.strongly_connected_components();
        sccs.sort();
        assert_eq!(sccs, vec![vec![0, 1], vec![2, 3]]);
    }

    #[test]
    fn self_loops_are_dropped() {
        let g = DirectedGraph::from_arcs(2, [(0, 0), (0, 1)]);
        assert_eq!(g.arc_count(), 1);
    }

    // Brute-force reachability via Floyd-Warshall closure.
    fn reach(g: &DirectedGraph) -> Vec<Vec<bool>> {
        let n = g.n();
        let mut r = vec![vec![false; n]; n];
        for (i, row) in r.iter_mut().enumerate() {
            row[i] = true;
        }
        for (i, j) in g.arcs() {
            r[i][j] = true;
        }
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    if r[i][k] && r[k][j] {
                        r[i][j] = true;
                    }
                }
            }
        }
        r
    }

    proptest! {
        #[test]
        fn components_match_mutual_reachability(
            n in 1usize..9,
            raw in proptest::collection::vec((0usize..9, 0usize..9), 0..40),
        ) {
            let g = DirectedGraph::from_arcs(n, raw.into_iter().map(|(a, b)| (a % n, b % n)));
            let r = reach(&g);
            let sccs = g.strongly_connected_components();
            let mut comp = vec![usize::MAX; n];
            for (c, scc) in sccs.iter().enumerate() {
                for &v in scc {
                    prop_assert_eq!(comp[v], usize::MAX);
                    comp[v] = c;
                }
            }
            for i in 0..n {
                for j in 0..n {
                    prop_assert_eq!(comp[i] == comp[j], r[i][j] && r[j][i]);
                }
            }
            let all = (0..n).all(|i| (0..n).all(|j| r[i][j]));
            prop_assert_eq!(g.is_strongly_connected(), all);
        }
    }
}
