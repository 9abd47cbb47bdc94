//! Independent reference solvers shared by the integration tests.

#![allow(dead_code)]

use fairwin::point::{GridPoint, GroupMask, TimedPoint, WeightedPointSet};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const EPS: f64 = 1e-9;

/// Dense two-phase simplex with Bland's rule for `min c·x, Ax = b, x ≥ 0`.
/// `None` when infeasible. The problems used here are bounded.
pub fn simplex_min(a: &[Vec<f64>], b: &[f64], c: &[f64]) -> Option<f64> {
    let m = a.len();
    let n = c.len();
    // tableau columns: n originals, m artificials, rhs
    let width = n + m + 1;
    let mut t: Vec<Vec<f64>> = (0..m)
        .map(|i| {
            let sign = if b[i] < 0.0 { -1.0 } else { 1.0 };
            let mut row = vec![0.0; width];
            for j in 0..n {
                row[j] = sign * a[i][j];
            }
            row[n + i] = 1.0;
            row[width - 1] = sign * b[i];
            row
        })
        .collect();
    let mut basis: Vec<usize> = (n..n + m).collect();

    let phase1: Vec<f64> = (0..n + m).map(|j| if j >= n { 1.0 } else { 0.0 }).collect();
    run(&mut t, &mut basis, &phase1, n + m);
    let infeas: f64 = basis
        .iter()
        .enumerate()
        .filter(|(_, &j)| j >= n)
        .map(|(i, _)| t[i][width - 1])
        .sum();
    let scale = b.iter().fold(1.0f64, |s, v| s.max(v.abs()));
    if infeas > 1e-7 * scale {
        return None;
    }
    // drive remaining artificials out of the basis
    let mut i = 0;
    while i < t.len() {
        if basis[i] >= n {
            match (0..n).find(|&j| t[i][j].abs() > EPS) {
                Some(j) => pivot(&mut t, &mut basis, i, j),
                None => {
                    t.remove(i);
                    basis.remove(i);
                    continue;
                }
            }
        }
        i += 1;
    }
    let mut phase2 = c.to_vec();
    phase2.extend(std::iter::repeat(0.0).take(m));
    run(&mut t, &mut basis, &phase2, n);
    Some(basis.iter().enumerate().map(|(i, &j)| c.get(j).copied().unwrap_or(0.0) * t[i][width - 1]).sum())
}

fn pivot(t: &mut [Vec<f64>], basis: &mut [usize], r: usize, col: usize) {
    let p = t[r][col];
    for v in t[r].iter_mut() {
        *v /= p;
    }
    let prow = t[r].clone();
    for (i, row) in t.iter_mut().enumerate() {
        if i != r {
            let f = row[col];
            if f != 0.0 {
                for (v, pv) in row.iter_mut().zip(&prow) {
                    *v -= f * pv;
                }
            }
        }
    }
    basis[r] = col;
}

/// Simplex iterations over the first `allowed` columns.
fn run(t: &mut [Vec<f64>], basis: &mut [usize], cost: &[f64], allowed: usize) {
    let width = t.first().map_or(0, Vec::len);
    loop {
        let entering = (0..allowed).find(|&j| {
            if basis.contains(&j) {
                return false;
            }
            let reduced = cost[j] - basis.iter().enumerate().map(|(i, &bj)| cost[bj] * t[i][j]).sum::<f64>();
            reduced < -EPS
        });
        let Some(col) = entering else { return };
        let mut best: Option<(f64, usize, usize)> = None;
        for i in 0..t.len() {
            if t[i][col] > EPS {
                let ratio = t[i][width - 1] / t[i][col];
                let better = match best {
                    None => true,
                    Some((r, _, bj)) => ratio < r - EPS || (ratio <= r + EPS && basis[i] < bj),
                };
                if better {
                    best = Some((ratio, i, basis[i]));
                }
            }
        }
        match best {
            Some((_, r, _)) => pivot(t, basis, r, col),
            None => return,
        }
    }
}

pub fn dist_z(a: &GridPoint, b: &GridPoint, z: u32) -> f64 {
    let sq: f64 = a.0.iter().zip(&b.0).map(|(x, y)| ((x - y) as f64).powi(2)).sum();
    sq.sqrt().powi(z as i32)
}

fn costs(points: &[TimedPoint], centers: &[GridPoint], z: u32) -> Vec<f64> {
    points
        .iter()
        .flat_map(|p| centers.iter().map(move |c| dist_z(&p.location, c, z)))
        .collect()
}

/// Transportation LP: every point ships its weight, center `c` receives
/// exactly `gamma[c]`.
pub fn transport_lp(points: &[TimedPoint], centers: &[GridPoint], gamma: &[f64], z: u32) -> Option<f64> {
    let (n, k) = (points.len(), centers.len());
    let mut a = Vec::new();
    let mut b = Vec::new();
    for (i, p) in points.iter().enumerate() {
        let mut row = vec![0.0; n * k];
        for c in 0..k {
            row[i * k + c] = 1.0;
        }
        a.push(row);
        b.push(p.weight);
    }
    for c in 0..k {
        let mut row = vec![0.0; n * k];
        for i in 0..n {
            row[i * k + c] = 1.0;
        }
        a.push(row);
        b.push(gamma[c]);
    }
    simplex_min(&a, &b, &costs(points, centers, z))
}

/// Partial transportation: route `min(w(P), Σγ)` with point and center
/// capacities.
pub fn partial_lp(points: &[TimedPoint], centers: &[GridPoint], gamma: &[f64], z: u32) -> Option<f64> {
    let (n, k) = (points.len(), centers.len());
    let vars = n * k + n + k;
    let total = points.iter().map(|p| p.weight).sum::<f64>().min(gamma.iter().sum());
    let mut a = Vec::new();
    let mut b = Vec::new();
    for (i, p) in points.iter().enumerate() {
        let mut row = vec![0.0; vars];
        for c in 0..k {
            row[i * k + c] = 1.0;
        }
        row[n * k + i] = 1.0;
        a.push(row);
        b.push(p.weight);
    }
    for c in 0..k {
        let mut row = vec![0.0; vars];
        for i in 0..n {
            row[i * k + c] = 1.0;
        }
        row[n * k + n + c] = 1.0;
        a.push(row);
        b.push(gamma[c]);
    }
    let mut row = vec![0.0; vars];
    for v in row.iter_mut().take(n * k) {
        *v = 1.0;
    }
    a.push(row);
    b.push(total);
    let mut cost = costs(points, centers, z);
    cost.extend(std::iter::repeat(0.0).take(n + k));
    simplex_min(&a, &b, &cost)
}

/// Two-center transportation by enumerating basic solutions: at most one
/// point splits its weight.
pub fn transport_vertices_two(points: &[TimedPoint], centers: &[GridPoint], gamma: &[f64], z: u32) -> Option<f64> {
    assert_eq!(centers.len(), 2);
    let n = points.len();
    let d: Vec<[f64; 2]> = points
        .iter()
        .map(|p| [dist_z(&p.location, &centers[0], z), dist_z(&p.location, &centers[1], z)])
        .collect();
    let tol = 1e-9 * gamma.iter().sum::<f64>().max(1.0);
    let mut best: Option<f64> = None;
    for split in std::iter::once(None).chain((0..n).map(Some)) {
        for mask in 0u32..(1 << n) {
            let mut to0 = 0.0;
            let mut cost = 0.0;
            for i in 0..n {
                if Some(i) == split {
                    continue;
                }
                let side = (mask >> i) & 1;
                if side == 0 {
                    to0 += points[i].weight;
                }
                cost += points[i].weight * d[i][side as usize];
            }
            let cost = match split {
                None if (to0 - gamma[0]).abs() <= tol => cost,
                None => continue,
                Some(f) => {
                    let x = gamma[0] - to0;
                    if x < -tol || x > points[f].weight + tol {
                        continue;
                    }
                    cost + x * d[f][0] + (points[f].weight - x) * d[f][1]
                }
            };
            best = Some(best.map_or(cost, |b: f64| b.min(cost)));
        }
    }
    best
}

/// Fair assignment LP: every point ships its weight and every center's
/// group-`j` mass lies in `[α_j, β_j]` times its total mass.
pub fn fair_lp(points: &[TimedPoint], centers: &[GridPoint], alpha: &[f64], beta: &[f64], z: u32) -> Option<f64> {
    let (n, k, l) = (points.len(), centers.len(), alpha.len());
    let xs = n * k;
    let vars = xs + 2 * k * l;
    let mut a = Vec::new();
    let mut b = Vec::new();
    for (i, p) in points.iter().enumerate() {
        let mut row = vec![0.0; vars];
        for c in 0..k {
            row[i * k + c] = 1.0;
        }
        a.push(row);
        b.push(p.weight);
    }
    for c in 0..k {
        for j in 0..l {
            let slack = xs + 2 * (c * l + j);
            let mut lo = vec![0.0; vars];
            let mut hi = vec![0.0; vars];
            for (i, p) in points.iter().enumerate() {
                let member = if p.groups.contains(j) { 1.0 } else { 0.0 };
                lo[i * k + c] = member - alpha[j];
                hi[i * k + c] = beta[j] - member;
            }
            lo[slack] = -1.0;
            hi[slack + 1] = -1.0;
            a.push(lo);
            b.push(0.0);
            a.push(hi);
            b.push(0.0);
        }
    }
    let mut cost = costs(points, centers, z);
    cost.extend(std::iter::repeat(0.0).take(2 * k * l));
    simplex_min(&a, &b, &cost)
}

/// Best fair LP value over all `k`-subsets of `candidates`.
pub fn brute_force_lp(points: &[TimedPoint], candidates: &[GridPoint], k: usize, alpha: &[f64], beta: &[f64], z: u32) -> Option<f64> {
    let mut best: Option<f64> = None;
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        let cs: Vec<GridPoint> = idx.iter().map(|&i| candidates[i].clone()).collect();
        if let Some(v) = fair_lp(points, &cs, alpha, beta, z) {
            best = Some(best.map_or(v, |b: f64| b.min(v)));
        }
        let mut i = k;
        loop {
            if i == 0 {
                return best;
            }
            i -= 1;
            if idx[i] < candidates.len() - k + i {
                idx[i] += 1;
                for j in i + 1..k {
                    idx[j] = idx[j - 1] + 1;
                }
                break;
            }
        }
    }
}

/// Random two-group points on `[1, side]^d` with small integer weights.
pub fn random_points(rng: &mut ChaCha8Rng, n: usize, d: usize, side: i64, weighted: bool) -> Vec<TimedPoint> {
    (0..n)
        .map(|i| {
            let coords = (0..d).map(|_| rng.random_range(1..=side)).collect();
            let w = if weighted { rng.random_range(1..=4) as f64 } else { 1.0 };
            TimedPoint::new(GridPoint(coords), i as i64 + 1, w, GroupMask::single(rng.random_range(0..2)))
        })
        .collect()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn set(points: &[TimedPoint]) -> WeightedPointSet {
    points.iter().cloned().collect()
}

pub fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs()).max(1.0)
}
