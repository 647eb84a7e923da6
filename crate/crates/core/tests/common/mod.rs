//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use std::collections::BTreeMap;

use groupdyn::cohesion::Mode;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type Matrix = Vec<Vec<u64>>;

pub fn random_digraph(rng: &mut ChaCha8Rng, max_n: usize) -> (usize, Vec<(usize, usize)>) {
    let n = rng.gen_range(0..=max_n);
    let p = rng.gen_range(0.1..=0.5);
    let mut arcs = Vec::new();
    for a in 0..n {
        for b in 0..n {
            if a != b && rng.gen_bool(p) {
                arcs.push((a, b));
            }
        }
    }
    (n, arcs)
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// 0/1 adjacency matrix of the induced graph under `mode`.
pub fn adjacency(n: usize, arcs: &[(usize, usize)], mode: Mode) -> Matrix {
    let mut d = vec![vec![0u64; n]; n];
    for &(a, b) in arcs {
        d[a][b] = 1;
    }
    let mut m = vec![vec![0u64; n]; n];
    for i in 0..n {
        for j in 0..n {
            m[i][j] = match mode {
                Mode::Directed => d[i][j],
                Mode::Reciprocal => d[i][j] & d[j][i],
                Mode::Undirected => d[i][j] | d[j][i],
            };
        }
    }
    m
}

pub fn matmul(a: &Matrix, b: &Matrix) -> Matrix {
    let n = a.len();
    let mut c = vec![vec![0u64; n]; n];
    for i in 0..n {
        for k in 0..n {
            if a[i][k] != 0 {
                for j in 0..n {
                    c[i][j] += a[i][k] * b[k][j];
                }
            }
        }
    }
    c
}

/// Ones over ordered pairs; a symmetric matrix holds each edge twice, which
/// matches dividing edges by unordered pairs.
pub fn oracle_density(a: &Matrix) -> Option<f64> {
    let n = a.len();
    if n < 2 {
        return None;
    }
    let ones: u64 = a.iter().flatten().sum();
    Some(ones as f64 / (n * (n - 1)) as f64)
}

pub fn oracle_transitivity(a: &Matrix, mode: Mode) -> Option<f64> {
    let n = a.len();
    let a2 = matmul(a, a);
    match mode {
        Mode::Directed => {
            let mut paths = 0;
            let mut closed = 0;
            for i in 0..n {
                for k in 0..n {
                    if i != k {
                        paths += a2[i][k];
                        closed += a2[i][k] * a[i][k];
                    }
                }
            }
            (paths > 0).then(|| closed as f64 / paths as f64)
        }
        _ => {
            let a3 = matmul(&a2, a);
            let trace: u64 = (0..n).map(|i| a3[i][i]).sum();
            let triples: u64 = (0..n)
                .map(|i| {
                    let d: u64 = a[i].iter().sum();
                    d * d.saturating_sub(1)
                })
                .sum();
            (triples > 0).then(|| trace as f64 / triples as f64)
        }
    }
}

pub fn oracle_avg_clustering(a: &Matrix, mode: Mode) -> Option<f64> {
    let n = a.len();
    if mode == Mode::Directed || n == 0 {
        return None;
    }
    let a3 = matmul(&matmul(a, a), a);
    let total: f64 = (0..n)
        .map(|i| {
            let d: u64 = a[i].iter().sum();
            if d < 2 {
                0.0
            } else {
                a3[i][i] as f64 / (d * (d - 1)) as f64
            }
        })
        .sum();
    Some(total / n as f64)
}

pub fn oracle_avg_shortest_path(a: &Matrix, mode: Mode) -> Option<f64> {
    if mode == Mode::Directed {
        return None;
    }
    let n = a.len();
    const INF: u64 = u64::MAX / 4;
    let mut d = vec![vec![INF; n]; n];
    for i in 0..n {
        d[i][i] = 0;
        for j in 0..n {
            if a[i][j] == 1 {
                d[i][j] = 1;
            }
        }
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                if d[i][k] + d[k][j] < d[i][j] {
                    d[i][j] = d[i][k] + d[k][j];
                }
            }
        }
    }
    // components as reachability classes keyed by their smallest vertex
    let mut comps: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for i in 0..n {
        let root = (0..n).find(|&j| d[i][j] < INF).unwrap();
        comps.entry(root).or_default().push(i);
    }
    let mut best: f64 = 0.0;
    for members in comps.values().filter(|m| m.len() > 1) {
        let mut sum = 0;
        for &i in members {
            for &j in members {
                sum += d[i][j];
            }
        }
        let k = members.len() as f64;
        best = best.max(sum as f64 / (k * (k - 1.0)));
    }
    Some(best)
}

/// Fraction of vertex pairs on which two labelings agree about co-membership.
pub fn rand_index(a: &[usize], b: &[usize]) -> f64 {
    assert_eq!(a.len(), b.len());
    let n = a.len();
    if n < 2 {
        return 1.0;
    }
    let mut agree = 0u64;
    for i in 0..n {
        for j in i + 1..n {
            agree += ((a[i] == a[j]) == (b[i] == b[j])) as u64;
        }
    }
    agree as f64 / (n * (n - 1) / 2) as f64
}

pub fn close(a: Option<f64>, b: Option<f64>, tol: f64) -> bool {
    match (a, b) {
        (None, None) => true,
        (Some(x), Some(y)) => (x - y).abs() <= tol,
        _ => false,
    }
}
