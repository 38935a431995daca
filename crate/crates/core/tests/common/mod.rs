//! Independent oracles shared by the integration suites. Everything here
//! recomputes quantities along routes disjoint from the library's own
//! implementation paths.
#![allow(dead_code)] // each suite uses its own subset

use auction_gap::{Instance, TriAgent};

/// Optimal-auction revenue of a triangular instance by enumerating all 2^n
/// atom-indicator outcomes: the auction serves the realized atom of largest
/// value, the continuous parts never win. Usable for n <= 20 or so.
pub fn brute_force_myerson(instance: &Instance) -> f64 {
    let tri: Vec<TriAgent> = instance.tri_agents().unwrap();
    let n = tri.len();
    assert!(n <= 20, "brute force oracle is exponential");
    let mut rev = 0.0;
    for mask in 0u32..(1 << n) {
        let mut prob = 1.0;
        let mut best = 0.0f64;
        for (i, t) in tri.iter().enumerate() {
            if mask & (1 << i) != 0 {
                prob *= t.qbar();
                best = best.max(t.vbar());
            } else {
                prob *= 1.0 - t.qbar();
            }
        }
        rev += prob * best;
    }
    rev
}

/// Adaptive-trapezoid (Romberg) quadrature of the tail-mass integral,
/// independent of the Gauss-Legendre panels used by the library. Works on
/// the same substituted domain `u = 1/v` but with a different rule and its
/// own Richardson extrapolation table.
pub fn romberg_q_oracle(p: f64, tol: f64) -> f64 {
    let g = |u: f64| {
        if u <= 0.0 {
            return 0.0;
        }
        let v = 1.0 / u;
        let x = 1.0 / (v * v - 1.0);
        -(x.ln_1p() - 2.0 * x) / u
    };
    let (a, b) = (0.0, 1.0 / p);
    let max_level = 22;
    let mut table: Vec<Vec<f64>> = Vec::with_capacity(max_level);
    let mut trapezoid = 0.5 * (b - a) * (g(a) + g(b));
    table.push(vec![trapezoid]);
    for k in 1..max_level {
        let points = 1usize << (k - 1);
        let h = (b - a) / points as f64;
        let mid_sum: f64 = (0..points).map(|i| g(a + (i as f64 + 0.5) * h)).sum();
        trapezoid = 0.5 * trapezoid + 0.5 * h * mid_sum;
        let mut row = vec![trapezoid];
        let mut factor = 1.0;
        for j in 1..=k {
            factor *= 4.0;
            let prev = table[k - 1][j - 1];
            let cur = row[j - 1];
            row.push(cur + (cur - prev) / (factor - 1.0));
        }
        let err = (row[row.len() - 1] - table[k - 1][k - 1]).abs();
        table.push(row);
        if k > 4 && err < tol {
            break;
        }
    }
    let last = table.last().unwrap();
    last[last.len() - 1]
}

/// Dilogarithm by power series, valid for |z| <= 1/2 (used at z = 1/p^2 for
/// moderate p). An analytic identity turns the tail-mass integral into
/// `ln(p^2/(p^2-1)) - Li2(1/p^2)/2`, giving a quadrature-free cross-check:
/// substitute t = 1/v^2 in the integral and integrate -ln(1-t)/(2t).
pub fn dilog_series(z: f64) -> f64 {
    assert!(z.abs() <= 0.5);
    let mut term = z;
    let mut sum = z;
    for k in 2..200 {
        term *= z;
        let add = term / (k * k) as f64;
        sum += add;
        if add.abs() < 1e-18 {
            break;
        }
    }
    sum
}

/// Closed-form tail mass via the dilog identity, for p with 1/p^2 <= 1/2.
pub fn dilog_q_oracle(p: f64) -> f64 {
    (p * p / (p * p - 1.0)).ln() - 0.5 * dilog_series(1.0 / (p * p))
}

/// Discretized ex ante optimum by greedy marginal filling on a quantile
/// grid: concave curves make per-step increments nonincreasing, so taking
/// the largest increments first is exact for the discretized problem.
pub fn greedy_grid_ex_ante(instance: &Instance, steps: usize) -> f64 {
    let h = 1.0 / steps as f64;
    let mut increments: Vec<f64> = Vec::new();
    for agent in instance.agents() {
        let curve = agent.revenue_curve();
        let mut prev = 0.0;
        for i in 1..=steps {
            let r = curve.eval(i as f64 * h).unwrap();
            increments.push(r - prev);
            prev = r;
        }
    }
    increments.sort_by(|a, b| b.total_cmp(a));
    increments.iter().take(steps).filter(|x| **x > 0.0).sum()
}
