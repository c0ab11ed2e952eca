use std::collections::VecDeque;

use super::WeightMatrix;

/// Whether a square nonnegative matrix is primitive.
///
/// A nonnegative matrix is primitive iff its support graph is strongly
/// connected and aperiodic. The period is the gcd of `level(u) + 1 - level(v)`
/// over all support edges `u -> v`, with levels taken from a BFS tree.
pub fn check_primitive(w: &WeightMatrix) -> bool {
    if !w.is_square() || w.rows() == 0 {
        return false;
    }
    let n = w.rows();
    let out: Vec<Vec<usize>> = (0..n).map(|i| (0..n).filter(|&j| w.get(i, j) > 0.0).collect()).collect();
    let mut inc = vec![Vec::new(); n];
    for (i, succ) in out.iter().enumerate() {
        for &j in succ {
            inc[j].push(i);
        }
    }

    let forward = bfs_levels(&out);
    if forward.iter().any(Option::is_none) || bfs_levels(&inc).iter().any(Option::is_none) {
        return false;
    }
    let level: Vec<i64> = forward.into_iter().map(|l| l.unwrap() as i64).collect();
    let mut period = 0i64;
    for (u, succ) in out.iter().enumerate() {
        for &v in succ {
            period = gcd(period, (level[u] + 1 - level[v]).abs());
        }
    }
    period == 1
}

fn bfs_levels(adj: &[Vec<usize>]) -> Vec<Option<usize>> {
    let mut level = vec![None; adj.len()];
    let mut queue = VecDeque::from([0]);
    level[0] = Some(0);
    while let Some(u) = queue.pop_front() {
        let next = level[u].unwrap() + 1;
        for &v in &adj[u] {
            if level[v].is_none() {
                level[v] = Some(next);
                queue.push_back(v);
            }
        }
    }
    level
}

fn gcd(a: i64, b: i64) -> i64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}
