use serde::{Deserialize, Serialize};

use crate::bounds::{evaluate_bound, BoundKind, BoundSpec, RateInputs};
use crate::error::{domain, Error, Result};
use crate::exec;
use crate::montecarlo::{domination_check, DominationVerdict, McEstimate, TIE_TOL};
use crate::rng::{open_unit, tags, StreamKey};

/// Largest instance solved exactly by the Held–Karp recursion.
pub const MAX_EXACT_TOUR: usize = 12;
pub const MIN_INNER_REP: u64 = 1000;

pub type Point = Vec<f64>;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TourLength {
    pub length: f64,
    /// False when the length comes from the 2-opt heuristic.
    pub exact: bool,
}

/// Row-major n×n Euclidean distances.
fn distance_matrix(points: &[Point]) -> Result<Vec<f64>> {
    let dim = points[0].len();
    if dim == 0 || points.iter().any(|p| p.len() != dim || p.iter().any(|c| !c.is_finite())) {
        return Err(domain("points must share one positive dimension and have finite coordinates"));
    }
    Ok(points
        .iter()
        .flat_map(|p| {
            points
                .iter()
                .map(move |q| p.iter().zip(q).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt())
        })
        .collect())
}

/// Length of the shortest closed tour: Held–Karp for n ≤ 12, nearest
/// neighbour plus first-improvement 2-opt otherwise.
pub fn tsp_tour_length(points: &[Point]) -> Result<TourLength> {
    if points.len() < 2 {
        return Err(domain(format!("a tour needs n >= 2 points, got {}", points.len())));
    }
    let dist = distance_matrix(points)?;
    let n = points.len();
    Ok(if n <= MAX_EXACT_TOUR {
        TourLength { length: held_karp(&dist, n), exact: true }
    } else {
        TourLength { length: two_opt(&dist, n), exact: false }
    })
}

fn held_karp(dist: &[f64], n: usize) -> f64 {
    if n == 2 {
        return 2.0 * dist[1];
    }
    // city 0 is the fixed start; bit j of a mask stands for city j+1
    let m = n - 1;
    let full = 1usize << m;
    let mut dp = vec![f64::INFINITY; full * m];
    for j in 0..m {
        dp[(1 << j) * m + j] = dist[j + 1];
    }
    for mask in 1..full {
        if mask & (mask - 1) == 0 {
            continue;
        }
        let mut set = mask;
        while set != 0 {
            let j = set.trailing_zeros() as usize;
            set &= set - 1;
            let prev = mask ^ (1 << j);
            // distances are symmetric, so row j+1 holds d(k+1, j+1)
            let row = &dist[(j + 1) * n + 1..(j + 2) * n];
            let from = &dp[prev * m..prev * m + m];
            let mut best = f64::INFINITY;
            let mut rest = prev;
            while rest != 0 {
                let k = rest.trailing_zeros() as usize;
                rest &= rest - 1;
                best = best.min(from[k] + row[k]);
            }
            dp[mask * m + j] = best;
        }
    }
    (0..m)
        .map(|j| dp[(full - 1) * m + j] + dist[(j + 1) * n])
        .fold(f64::INFINITY, f64::min)
}

fn two_opt(dist: &[f64], n: usize) -> f64 {
    let at = |a: usize, b: usize| dist[a * n + b];
    let mut tour = Vec::with_capacity(n);
    let mut used = vec![false; n];
    let mut cur = 0;
    used[0] = true;
    tour.push(0);
    for _ in 1..n {
        let next = (0..n)
            .filter(|&j| !used[j])
            .min_by(|&a, &b| at(cur, a).total_cmp(&at(cur, b)))
            .expect("unvisited city");
        used[next] = true;
        tour.push(next);
        cur = next;
    }
    'search: loop {
        for i in 0..n - 1 {
            for k in i + 2..n {
                let (a, b) = (tour[i], tour[i + 1]);
                let (c, d) = (tour[k], tour[(k + 1) % n]);
                if a == d {
                    continue;
                }
                if at(a, c) + at(b, d) < at(a, b) + at(c, d) - 1e-12 {
                    tour[i + 1..=k].reverse();
                    continue 'search;
                }
            }
        }
        break;
    }
    (0..n).map(|i| at(tour[i], tour[(i + 1) % n])).sum()
}

fn uniform_point(dim: usize, key: StreamKey) -> Point {
    let mut rng = key.rng();
    (0..dim).map(|_| open_unit(&mut rng)).collect()
}

/// `n` i.i.d. uniform points in [0,1]^dim for instance `instance`.
pub fn random_points(n: usize, dim: usize, seed: u64, instance: u64) -> Vec<Point> {
    let key = StreamKey::new(seed).child(tags::TSP_POINTS).child(instance);
    (0..n as u64).map(|i| uniform_point(dim, key.child(i))).collect()
}

/// Estimates of E[T_n | F_i] for i = 0..n and the differences
/// d_i = E[T_n|F_i] − E[T_n|F_{i−1}], with standard errors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MartingaleDiffs {
    pub tour_length: f64,
    pub conditional: Vec<f64>,
    pub conditional_se: Vec<f64>,
    pub diffs: Vec<f64>,
    pub diff_se: Vec<f64>,
}

impl MartingaleDiffs {
    pub fn sq_sum(&self) -> f64 {
        self.diffs.iter().map(|d| d * d).sum()
    }
}

/// Inner Monte Carlo: level i keeps the first i points and resamples the
/// rest `inner_rep` times, solving each resampled instance exactly.
pub fn tsp_martingale_diffs(points: &[Point], inner_rep: u64, seed: u64) -> Result<MartingaleDiffs> {
    let n = points.len();
    if n > MAX_EXACT_TOUR {
        return Err(Error::Size(format!(
            "conditional expectations need exact tours, n <= {MAX_EXACT_TOUR}, got {n}"
        )));
    }
    if inner_rep < MIN_INNER_REP {
        return Err(domain(format!("inner_rep must be >= {MIN_INNER_REP}, got {inner_rep}")));
    }
    let tour_length = tsp_tour_length(points)?.length;
    let dim = points[0].len();
    if points.iter().flatten().any(|c| !(0.0..=1.0).contains(c)) {
        return Err(domain("points must lie in the unit cube"));
    }
    let root = StreamKey::new(seed).child(tags::TSP_INNER);
    let mut conditional = Vec::with_capacity(n + 1);
    let mut conditional_se = Vec::with_capacity(n + 1);
    for level in 0..n {
        let key = root.child(level as u64);
        let vals = exec::map_indexed(inner_rep as usize, |r| {
            let rk = key.child(r as u64);
            let mut pts = points[..level].to_vec();
            pts.extend((level..n).map(|j| uniform_point(dim, rk.child(j as u64))));
            held_karp(&distance_matrix(&pts).expect("validated points"), n)
        });
        let (mean, se) = exec::mean_and_se(&vals);
        conditional.push(mean);
        conditional_se.push(se);
    }
    conditional.push(tour_length);
    conditional_se.push(0.0);
    let diffs = conditional.windows(2).map(|w| w[1] - w[0]).collect();
    let diff_se = conditional_se.windows(2).map(|w| w[0].hypot(w[1])).collect();
    Ok(MartingaleDiffs {
        tour_length,
        conditional,
        conditional_se,
        diffs,
        diff_se,
    })
}

/// Ê[T_n] from `reps` independent instances, with its standard error.
pub fn mean_tour_length(n: usize, dim: usize, reps: u64, seed: u64) -> Result<(f64, f64)> {
    if !(2..=MAX_EXACT_TOUR).contains(&n) || reps < 2 {
        return Err(domain(format!("need 2 <= n <= {MAX_EXACT_TOUR} and reps >= 2")));
    }
    let root = StreamKey::new(seed).child(tags::TSP_MEAN);
    let vals = exec::map_indexed(reps as usize, |r| {
        let key = root.child(r as u64);
        let pts: Vec<Point> = (0..n as u64).map(|j| uniform_point(dim, key.child(j))).collect();
        held_karp(&distance_matrix(&pts).expect("valid points"), n)
    });
    Ok(exec::mean_and_se(&vals))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TspConfig {
    pub n: usize,
    pub d: u32,
    pub t_grid: Vec<f64>,
    pub instances: u64,
    pub inner_rep: u64,
    /// Sample size of the independent Ê[T_n]; defaults to 10·inner_rep.
    pub mean_rep: Option<u64>,
    /// Window constant; calibrated from the instances when absent.
    pub c1: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TspVerdict {
    pub t: f64,
    pub verdict: DominationVerdict,
}

/// Per-index counts of the sign of the estimated d_i across instances.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignPattern {
    pub positive: Vec<u64>,
    pub negative: Vec<u64>,
    pub zero: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TspReport {
    pub config: TspConfig,
    pub c1: f64,
    pub c1_calibrated: bool,
    pub window: (f64, f64),
    pub mean_estimate: f64,
    pub mean_se: f64,
    /// Instances whose Σd_i agrees with T_n − Ê[T_n] within 3 combined SEs.
    pub reconciled: u64,
    pub sign_pattern: SignPattern,
    pub verdicts: Vec<TspVerdict>,
}

/// Check the TSP self-normalized peeling bound. T_n − E[T_n] is centered by
/// an independent estimate of E[T_n]. Without an explicit `c1` the window
/// constant is max_j √Σd²_j / n^{1/2}, the smallest value whose upper window
/// edge covers every sampled instance.
pub fn verify_tsp(config: &TspConfig, gamma: f64, seed: u64) -> Result<TspReport> {
    let n = config.n;
    if !(2..=MAX_EXACT_TOUR).contains(&n) {
        return Err(Error::Size(format!("verification needs 2 <= n <= {MAX_EXACT_TOUR}, got {n}")));
    }
    if config.d < 2 {
        return Err(domain(format!("dimension d must be >= 2, got {}", config.d)));
    }
    if config.t_grid.is_empty() || config.instances < 1 {
        return Err(domain("t grid and instance count must be nonempty"));
    }
    if let Some(c1) = config.c1 {
        if !(c1 > 0.0) {
            return Err(domain(format!("c1 must be > 0, got {c1}")));
        }
    }
    let dim = config.d as usize;
    let bounds = config
        .t_grid
        .iter()
        .map(|&t| {
            let params = RateInputs {
                t: Some(t),
                n: Some(n as u64),
                d: Some(config.d),
                ..Default::default()
            };
            evaluate_bound(&BoundSpec::new(BoundKind::Thm34Tsp, params)?)
        })
        .collect::<Result<Vec<f64>>>()?;
    let mean_rep = config.mean_rep.unwrap_or(10 * config.inner_rep);
    let (mean, mean_se) = mean_tour_length(n, dim, mean_rep, seed)?;
    let inner_root = StreamKey::new(seed).child(tags::TSP_INNER);
    let runs = (0..config.instances)
        .map(|j| {
            let pts = random_points(n, dim, seed, j);
            tsp_martingale_diffs(&pts, config.inner_rep, inner_root.child(j).raw())
        })
        .collect::<Result<Vec<_>>>()?;

    let nf = n as f64;
    let c1_calibrated = config.c1.is_none();
    let c1 = config
        .c1
        .unwrap_or_else(|| runs.iter().map(|r| r.sq_sum().sqrt()).fold(0.0, f64::max) / nf.sqrt());
    let window = (c1 * nf.powf(0.5 - 1.0 / config.d as f64), c1 * nf.sqrt());

    let mut reconciled = 0;
    let mut sign_pattern = SignPattern {
        positive: vec![0; n],
        negative: vec![0; n],
        zero: vec![0; n],
    };
    let mut hits = vec![0u64; config.t_grid.len()];
    for r in &runs {
        // Σd_i telescopes to T_n − Ê[T_n|F_0]; compare with the independent mean
        let gap = (r.conditional[0] - mean).abs();
        if gap <= 3.0 * r.conditional_se[0].hypot(mean_se) {
            reconciled += 1;
        }
        for (i, d) in r.diffs.iter().enumerate() {
            match d.partial_cmp(&0.0) {
                Some(std::cmp::Ordering::Greater) => sign_pattern.positive[i] += 1,
                Some(std::cmp::Ordering::Less) => sign_pattern.negative[i] += 1,
                _ => sign_pattern.zero[i] += 1,
            }
        }
        let v = r.sq_sum().sqrt();
        let in_window = v >= window.0 * (1.0 - TIE_TOL) && v <= window.1 * (1.0 + TIE_TOL);
        if !in_window || v <= 0.0 {
            continue;
        }
        let ratio = (r.tour_length - mean) / v;
        for (k, &t) in config.t_grid.iter().enumerate() {
            if ratio >= t - TIE_TOL * t.max(1.0) {
                hits[k] += 1;
            }
        }
    }
    let verdicts = config
        .t_grid
        .iter()
        .zip(bounds)
        .zip(hits)
        .map(|((&t, bound), h)| TspVerdict {
            t,
            verdict: domination_check(&McEstimate::from_counts(h, config.instances, gamma), bound),
        })
        .collect();
    Ok(TspReport {
        config: config.clone(),
        c1,
        c1_calibrated,
        window,
        mean_estimate: mean,
        mean_se,
        reconciled,
        sign_pattern,
        verdicts,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::montecarlo::VerdictStatus;

    fn brute_force(points: &[Point]) -> f64 {
        let dist = distance_matrix(points).unwrap();
        let n = points.len();
        let mut perm: Vec<usize> = (1..n).collect();
        let mut best = f64::INFINITY;
        permute(&mut perm, 0, &mut |p| {
            let mut len = dist[p[0]] + dist[p[p.len() - 1] * n];
            for w in p.windows(2) {
                len += dist[w[0] * n + w[1]];
            }
            best = best.min(len);
        });
        best
    }

    fn permute(v: &mut Vec<usize>, k: usize, f: &mut impl FnMut(&[usize])) {
        if k == v.len() {
            f(v);
            return;
        }
        for i in k..v.len() {
            v.swap(k, i);
            permute(v, k + 1, f);
            v.swap(k, i);
        }
    }

    #[test]
    fn small_tours() {
        let tri = vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0]];
        let t = tsp_tour_length(&tri).unwrap();
        assert!((t.length - (2.0 + 2f64.sqrt())).abs() < 1e-14);
        assert!(t.exact);
        let sq = vec![vec![0.0, 0.0], vec![1.0, 1.0], vec![1.0, 0.0], vec![0.0, 1.0]];
        assert!((tsp_tour_length(&sq).unwrap().length - 4.0).abs() < 1e-14);
        let two = vec![vec![0.0, 0.0], vec![0.3, 0.4]];
        assert!((tsp_tour_length(&two).unwrap().length - 1.0).abs() < 1e-14);
        assert!(tsp_tour_length(&two[..1]).is_err());
    }

    #[test]
    fn held_karp_matches_brute_force() {
        for inst in 0..20 {
            let pts = random_points(7, 2, 4, inst);
            let hk = tsp_tour_length(&pts).unwrap().length;
            assert!((hk - brute_force(&pts)).abs() < 1e-12);
        }
    }

    #[test]
    fn heuristic_never_beats_exact() {
        for inst in 0..20 {
            let pts = random_points(10, 2, 5, inst);
            let dist = distance_matrix(&pts).unwrap();
            assert!(held_karp(&dist, 10) <= two_opt(&dist, 10) + 1e-12);
        }
        let pts = random_points(30, 2, 5, 0);
        assert!(!tsp_tour_length(&pts).unwrap().exact);
    }

    #[test]
    fn last_conditional_is_the_tour() {
        let pts = random_points(3, 2, 9, 0);
        let d = tsp_martingale_diffs(&pts, 1000, 1).unwrap();
        assert_eq!(d.conditional[3], tsp_tour_length(&pts).unwrap().length);
        assert_eq!(d.diffs.len(), 3);
        let total: f64 = d.diffs.iter().sum();
        assert!((total - (d.tour_length - d.conditional[0])).abs() < 1e-12);
        assert_eq!(*d.diff_se.last().unwrap(), d.conditional_se[2]);
    }

    #[test]
    fn size_limits() {
        let pts = random_points(13, 2, 9, 0);
        assert!(matches!(tsp_martingale_diffs(&pts, 1000, 1), Err(Error::Size(_))));
        let pts = random_points(5, 2, 9, 0);
        assert!(tsp_martingale_diffs(&pts, 10, 1).is_err());
    }

    #[test]
    fn small_verification() {
        let cfg = TspConfig {
            n: 6,
            d: 2,
            t_grid: vec![0.1, 4.0],
            instances: 20,
            inner_rep: 1000,
            mean_rep: None,
            c1: None,
        };
        let rep = verify_tsp(&cfg, 0.99, 3).unwrap();
        assert!(rep.c1_calibrated);
        assert_eq!(rep.verdicts[0].verdict.status, VerdictStatus::Vacuous);
        assert!(rep.verdicts.iter().all(|v| v.verdict.status != VerdictStatus::ViolationEvidence));
        assert!(rep.reconciled >= 17, "{}", rep.reconciled);
        let total: u64 = rep.sign_pattern.positive.iter().chain(&rep.sign_pattern.negative).sum();
        assert_eq!(total + rep.sign_pattern.zero.iter().sum::<u64>(), 6 * 20);
    }

    #[test]
    fn oversized_c1_empties_window() {
        let cfg = TspConfig {
            n: 5,
            d: 2,
            t_grid: vec![0.5],
            instances: 5,
            inner_rep: 1000,
            mean_rep: Some(2000),
            c1: Some(100.0),
        };
        let rep = verify_tsp(&cfg, 0.99, 3).unwrap();
        assert_eq!(rep.verdicts[0].verdict.estimate.hits, 0);
    }
}
