//! Digraph helpers over dense node indices. Arcs are `(from, to)` pairs and
//! may repeat.

use alloc::collections::VecDeque;
use alloc::vec;
use alloc::vec::Vec;

pub(crate) fn adjacency(nodes: usize, arcs: impl Iterator<Item = (usize, usize)>) -> Vec<Vec<usize>> {
    let mut adj = vec![Vec::new(); nodes];
    for (a, b) in arcs {
        adj[a].push(b);
    }
    adj
}

/// Strongly connected components (iterative Tarjan). Components are returned
/// sorted by their smallest node, and each component's nodes ascending.
pub(crate) fn sccs(adj: &[Vec<usize>]) -> Vec<Vec<usize>> {
    let n = adj.len();
    let mut index = vec![usize::MAX; n];
    let mut low = vec![0usize; n];
    let mut on_stack = vec![false; n];
    let mut stack = Vec::new();
    let mut out = Vec::new();
    let mut next = 0usize;
    for root in 0..n {
        if index[root] != usize::MAX {
            continue;
        }
        let mut call: Vec<(usize, usize)> = vec![(root, 0)];
        index[root] = next;
        low[root] = next;
        next += 1;
        stack.push(root);
        on_stack[root] = true;
        while let Some(top) = call.last_mut() {
            let v = top.0;
            if top.1 < adj[v].len() {
                let w = adj[v][top.1];
                top.1 += 1;
                if index[w] == usize::MAX {
                    index[w] = next;
                    low[w] = next;
                    next += 1;
                    stack.push(w);
                    on_stack[w] = true;
                    call.push((w, 0));
                } else if on_stack[w] {
                    low[v] = low[v].min(index[w]);
                }
            } else {
                call.pop();
                if let Some(&(parent, _)) = call.last() {
                    low[parent] = low[parent].min(low[v]);
                }
                if low[v] == index[v] {
                    let mut comp = Vec::new();
                    loop {
                        let w = stack.pop().expect("tarjan stack");
                        on_stack[w] = false;
                        comp.push(w);
                        if w == v {
                            break;
                        }
                    }
                    comp.sort_unstable();
                    out.push(comp);
                }
            }
        }
    }
    out.sort_by_key(|c| c[0]);
    out
}

pub(crate) fn strongly_connected(adj: &[Vec<usize>]) -> bool {
    !adj.is_empty() && sccs(adj).len() == 1
}

/// Breadth-first distances from `src` (usize::MAX when unreachable).
pub(crate) fn bfs(adj: &[Vec<usize>], src: usize) -> Vec<usize> {
    let mut dist = vec![usize::MAX; adj.len()];
    let mut queue = VecDeque::new();
    dist[src] = 0;
    queue.push_back(src);
    while let Some(v) = queue.pop_front() {
        for &w in &adj[v] {
            if dist[w] == usize::MAX {
                dist[w] = dist[v] + 1;
                queue.push_back(w);
            }
        }
    }
    dist
}

/// Minimum mean cycle weight of a strongly connected digraph (Karp).
/// `arcs` are `(from, to, weight)` over nodes `0..nodes`. Returns `None` if
/// there is no cycle.
#[allow(clippy::needless_range_loop)]
pub(crate) fn min_mean_cycle(nodes: usize, arcs: &[(usize, usize, f64)]) -> Option<f64> {
    if nodes == 0 || arcs.is_empty() {
        return None;
    }
    let inf = f64::INFINITY;
    // walks of exactly k arcs from a virtual source connected to every node
    let mut d = vec![vec![inf; nodes]; nodes + 1];
    d[0].fill(0.0);
    for k in 1..=nodes {
        for &(a, b, w) in arcs {
            if d[k - 1][a] < inf {
                let cand = d[k - 1][a] + w;
                if cand < d[k][b] {
                    d[k][b] = cand;
                }
            }
        }
    }
    let mut best: Option<f64> = None;
    for v in 0..nodes {
        if d[nodes][v] == inf {
            continue;
        }
        let mut worst = f64::NEG_INFINITY;
        for k in 0..nodes {
            if d[k][v] < inf {
                worst = worst.max((d[nodes][v] - d[k][v]) / (nodes - k) as f64);
            }
        }
        best = Some(best.map_or(worst, |b: f64| b.min(worst)));
    }
    best
}

/// Cheapest path from `src` to `dst` using arcs accepted by `usable`
/// (Dijkstra on nonnegative weights; ties resolved by arc order). Returns
/// the arc indices along the path.
pub(crate) fn cheapest_path(
    nodes: usize,
    arcs: &[(usize, usize)],
    weight: impl Fn(usize) -> f64,
    usable: impl Fn(usize) -> bool,
    src: usize,
    dst: usize,
) -> Option<Vec<usize>> {
    let mut dist = vec![f64::INFINITY; nodes];
    let mut via = vec![usize::MAX; nodes];
    let mut done = vec![false; nodes];
    dist[src] = 0.0;
    for _ in 0..nodes {
        let mut u = usize::MAX;
        for v in 0..nodes {
            if !done[v] && dist[v] < f64::INFINITY && (u == usize::MAX || dist[v] < dist[u]) {
                u = v;
            }
        }
        if u == usize::MAX {
            break;
        }
        done[u] = true;
        if u == dst {
            break;
        }
        for (e, &(a, b)) in arcs.iter().enumerate() {
            if a != u || !usable(e) {
                continue;
            }
            let cand = dist[u] + weight(e);
            if cand < dist[b] {
                dist[b] = cand;
                via[b] = e;
            }
        }
    }
    if dist[dst] == f64::INFINITY {
        return None;
    }
    let mut path = Vec::new();
    let mut v = dst;
    while v != src {
        let e = via[v];
        path.push(e);
        v = arcs[e].0;
    }
    path.reverse();
    Some(path)
}
