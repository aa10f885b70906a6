//! Maximum mean cycle of a weighted digraph (Karp).
//!
//! The table of Karp's recurrence is recomputed in two passes so memory
//! stays linear in the number of nodes. A cycle attaining the optimum is
//! then extracted from the subgraph of edges that are tight for the
//! longest-path potentials of the reweighted graph `w - mean`.

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub from: usize,
    pub to: usize,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeanCycle {
    pub mean: f64,
    /// Node sequence; the closing edge returns to the first node.
    pub nodes: Vec<usize>,
    pub weight: f64,
}

fn relax(n: usize, edges: &[Edge], prev: &[f64], next: &mut [f64]) {
    next.iter_mut().for_each(|v| *v = f64::NEG_INFINITY);
    for e in edges {
        let cand = prev[e.from] + e.weight;
        if cand > next[e.to] {
            next[e.to] = cand;
        }
    }
    debug_assert_eq!(next.len(), n);
}

/// Maximum mean weight over all cycles, or `None` for an acyclic graph.
pub fn max_mean(n: usize, edges: &[Edge]) -> Option<f64> {
    if n == 0 || edges.is_empty() {
        return None;
    }
    // D_n by a rolling pass
    let mut cur = vec![0.0f64; n];
    let mut nxt = vec![0.0; n];
    for _ in 0..n {
        relax(n, edges, &cur, &mut nxt);
        std::mem::swap(&mut cur, &mut nxt);
    }
    let dn = cur;
    // second pass: min over k of (D_n - D_k) / (n - k)
    let mut best = vec![f64::INFINITY; n];
    let mut dk = vec![0.0f64; n];
    let mut tmp = vec![0.0; n];
    for k in 0..n {
        for v in 0..n {
            if dn[v].is_finite() && dk[v].is_finite() {
                best[v] = best[v].min((dn[v] - dk[v]) / (n - k) as f64);
            }
        }
        relax(n, edges, &dk, &mut tmp);
        std::mem::swap(&mut dk, &mut tmp);
    }
    (0..n)
        .filter(|&v| dn[v].is_finite())
        .map(|v| best[v])
        .filter(|b| b.is_finite())
        .fold(None, |acc: Option<f64>, b| Some(acc.map_or(b, |a| a.max(b))))
}

/// Maximum mean cycle together with one cycle attaining it.
pub fn max_mean_cycle(n: usize, edges: &[Edge]) -> Option<MeanCycle> {
    let mean = max_mean(n, edges)?;
    let scale = edges.iter().map(|e| e.weight.abs()).fold(mean.abs(), f64::max).max(1e-300);
    let slack = 1e-9 * scale * n as f64;
    // longest-path potentials for w - mean (no positive cycles up to rounding)
    let mut pot = vec![0.0; n];
    for _ in 0..n {
        let mut changed = false;
        for e in edges {
            let cand = pot[e.from] + e.weight - mean;
            if cand > pot[e.to] + slack * 1e-3 {
                pot[e.to] = cand;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    let mut tight: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    for e in edges {
        if pot[e.from] + e.weight - mean >= pot[e.to] - slack {
            tight[e.from].push((e.to, e.weight));
        }
    }
    // iterative colour DFS for a cycle in the tight subgraph
    let mut colour = vec![0u8; n];
    for root in 0..n {
        if colour[root] != 0 {
            continue;
        }
        let mut stack: Vec<(usize, usize)> = vec![(root, 0)];
        let mut path: Vec<usize> = vec![root];
        colour[root] = 1;
        while let Some(top) = stack.last_mut() {
            let v = top.0;
            if top.1 < tight[v].len() {
                let (u, _) = tight[v][top.1];
                top.1 += 1;
                match colour[u] {
                    0 => {
                        colour[u] = 1;
                        stack.push((u, 0));
                        path.push(u);
                    }
                    1 => {
                        let start = path.iter().position(|&p| p == u).unwrap();
                        let nodes = path[start..].to_vec();
                        let weight = cycle_weight(&nodes, edges);
                        return Some(MeanCycle {
                            mean: weight / nodes.len() as f64,
                            nodes,
                            weight,
                        });
                    }
                    _ => {}
                }
            } else {
                colour[v] = 2;
                stack.pop();
                path.pop();
            }
        }
    }
    None
}

/// Weight of a node cycle, using the heaviest parallel edge for each step.
pub fn cycle_weight(nodes: &[usize], edges: &[Edge]) -> f64 {
    let k = nodes.len();
    (0..k)
        .map(|i| {
            let (a, b) = (nodes[i], nodes[(i + 1) % k]);
            edges
                .iter()
                .filter(|e| e.from == a && e.to == b)
                .map(|e| e.weight)
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Brute force over all simple cycles (small graphs only).
    fn brute_max_mean(n: usize, edges: &[Edge]) -> Option<f64> {
        let mut best: Option<f64> = None;
        fn dfs(start: usize, v: usize, edges: &[Edge], path: &mut Vec<usize>, w: f64, best: &mut Option<f64>) {
            for e in edges.iter().filter(|e| e.from == v) {
                if e.to == start {
                    let m = (w + e.weight) / path.len() as f64;
                    *best = Some(best.map_or(m, |b: f64| b.max(m)));
                } else if e.to > start && !path.contains(&e.to) {
                    path.push(e.to);
                    dfs(start, e.to, edges, path, w + e.weight, best);
                    path.pop();
                }
            }
        }
        for s in 0..n {
            dfs(s, s, edges, &mut vec![s], 0.0, &mut best);
        }
        best
    }

    #[test]
    fn ring_and_chord() {
        let mut edges: Vec<Edge> = (0..4)
            .map(|i| Edge { from: i, to: (i + 1) % 4, weight: -1.0 })
            .collect();
        assert_eq!(max_mean(4, &edges), Some(-1.0));
        edges.push(Edge { from: 1, to: 0, weight: 3.0 });
        let c = max_mean_cycle(4, &edges).unwrap();
        assert_eq!(c.mean, 1.0);
        assert_eq!(c.nodes.len(), 2);
    }

    #[test]
    fn acyclic_has_none() {
        let edges = [Edge { from: 0, to: 1, weight: 1.0 }, Edge { from: 1, to: 2, weight: 1.0 }];
        assert_eq!(max_mean(3, &edges), None);
        assert_eq!(max_mean_cycle(3, &edges), None);
    }

    proptest! {
        #[test]
        fn karp_matches_brute_force(
            n in 1usize..7,
            raw in prop::collection::vec((0usize..7, 0usize..7, -5.0f64..5.0), 0..16),
        ) {
            let edges: Vec<Edge> = raw
                .into_iter()
                .filter(|&(a, b, _)| a < n && b < n)
                .map(|(from, to, weight)| Edge { from, to, weight })
                .collect();
            let karp = max_mean(n, &edges);
            let brute = brute_max_mean(n, &edges);
            match (karp, brute) {
                (None, None) => {}
                (Some(k), Some(b)) => {
                    prop_assert!((k - b).abs() < 1e-9, "karp {k} brute {b}");
                    let c = max_mean_cycle(n, &edges).unwrap();
                    prop_assert!((c.mean - b).abs() < 1e-9);
                }
                other => prop_assert!(false, "mismatch {other:?}"),
            }
        }
    }
}
