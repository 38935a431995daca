//! The irregular value-or-nothing instance family on which anonymous
//! mechanisms cannot beat an n-approximation: agent `i` is worth `h^i` with
//! probability `h^-i` and nothing otherwise, so every agent contributes one
//! unit of ex ante revenue but no anonymous price or reserve can collect
//! more than roughly one unit in total.

use serde::Serialize;

use crate::curves::{Agent, Instance};
use crate::error::{Error, Result};
use crate::revenue::{mc_reserve_estimates, McConfig, McEstimate};

/// The two-point instance family of agents `h^i` w.p. `h^-i`, `i = 1..=n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IrregularInstance {
    pub n: usize,
    pub h: f64,
}

impl IrregularInstance {
    /// Requires `h > 1`, `h^n` representable, and small enough total atom
    /// mass that serving every atom is ex ante feasible.
    pub fn new(n: usize, h: f64) -> Result<Self> {
        if n < 1 {
            return Err(Error::Config("irregular instance needs n >= 1".into()));
        }
        if h <= 1.0 || !h.is_finite() {
            return Err(Error::Domain(format!(
                "irregular instance needs h > 1, got {h}"
            )));
        }
        if n as f64 * h.ln() > 300.0 * std::f64::consts::LN_10 {
            return Err(Error::Domain(format!(
                "h^n overflows a double: h={h}, n={n}"
            )));
        }
        let mass: f64 = (1..=n).map(|i| h.powi(-(i as i32))).sum();
        if mass > 1.0 {
            return Err(Error::Domain(format!(
                "atom masses sum to {mass} > 1; pick a larger h"
            )));
        }
        Ok(Self { n, h })
    }

    /// Materialize as a two-point instance, lowest value first.
    pub fn to_instance(&self) -> Instance {
        let agents = (1..=self.n)
            .map(|i| Agent::TwoPoint {
                value: self.h.powi(i as i32),
                prob: self.h.powi(-(i as i32)),
            })
            .collect();
        Instance::new(agents).expect("parameters validated at construction")
    }

    /// The exact ex ante optimum serves every atom outright: probability
    /// `h^-i` on agent `i` earns `h^i * h^-i = 1`, hence revenue `n`.
    pub fn ex_ante(&self) -> f64 {
        self.n as f64
    }

    /// Ex ante serving probabilities (the atom masses).
    pub fn ex_ante_quantiles(&self) -> Vec<f64> {
        (1..=self.n).map(|i| self.h.powi(-(i as i32))).collect()
    }
}

/// Build the two-point instance; see [`IrregularInstance`].
pub fn make_irregular(n: usize, h: f64) -> Result<IrregularInstance> {
    IrregularInstance::new(n, h)
}

/// Revenue of sequentially offering agent `i` its own atom value `h^i`, in
/// decreasing order of price: `1 + sum_{i=2}^n prod_{j=1}^{i-1} (1 -
/// h^-(n-j+1))`. Converges to `n` as `h` grows.
pub fn irregular_seq_posted(inst: &IrregularInstance) -> f64 {
    let h = inst.h;
    let n = inst.n;
    let mut rev = 1.0;
    let mut survive = 1.0;
    for i in 2..=n {
        // agent offered in step i-1 has value h^(n-i+2); it declines with
        // probability 1 - h^-(n-i+2)
        survive *= 1.0 - h.powi(-((n - i + 2) as i32));
        rev += survive;
    }
    rev
}

/// Upper bound on the second-price revenue with reserve `h^i`: agents `j >=
/// i` contribute at most `h^-j * (j - i + h^i)` each. Tends to one as `h`
/// grows.
pub fn irregular_reserve_bound(inst: &IrregularInstance, i: usize) -> Result<f64> {
    if i < 1 || i > inst.n {
        return Err(Error::Domain(format!(
            "reserve exponent {i} out of 1..={}",
            inst.n
        )));
    }
    let h = inst.h;
    let mut bound = 0.0;
    for j in i..=inst.n {
        // h^-j * (j - i + h^i) = h^(i-j) + (j-i) h^-j, overflow-free
        bound += h.powi(i as i32 - j as i32) + (j - i) as f64 * h.powi(-(j as i32));
    }
    Ok(bound)
}

/// Anonymous pricing is an n-approximation to the ex ante relaxation:
/// posting the price of the largest single ex-ante contribution collects at
/// least `max_i R_i(q_i) >= (sum_i R_i(q_i)) / n`. Returns that lower bound.
pub fn uniform_price_lb(instance: &Instance, exante_quantiles: &[f64]) -> Result<f64> {
    if exante_quantiles.len() != instance.len() {
        return Err(Error::Config(format!(
            "quantile vector length {} does not match agent count {}",
            exante_quantiles.len(),
            instance.len()
        )));
    }
    let mut best = 0.0f64;
    for (a, &q) in instance.agents().iter().zip(exante_quantiles) {
        best = best.max(a.revenue_curve().eval(q)?);
    }
    Ok(best)
}

/// Everything the `irregular` CLI subcommand reports.
#[derive(Debug, Clone, Serialize)]
pub struct IrregularReport {
    pub n: usize,
    pub h: f64,
    pub ex_ante: f64,
    pub seq_posted: f64,
    /// `irregular_reserve_bound` for every reserve exponent `i = 1..=n`.
    pub reserve_bounds: Vec<f64>,
    /// Best reserve among `{h^i}` by Monte-Carlo estimate.
    pub mc_reserve: McReserveRow,
    pub ratios: IrregularRatios,
}

#[derive(Debug, Clone, Serialize)]
pub struct McReserveRow {
    pub reserve: f64,
    pub revenue: f64,
    pub stderr: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct IrregularRatios {
    /// Sequential posted pricing (a lower bound on the optimal auction)
    /// against the best anonymous reserve estimate.
    pub opt_over_reserve: f64,
    pub ex_ante_over_reserve: f64,
    /// `ex_ante / uniform_price_lb`, at most `n` by construction.
    pub pricing_approximation: f64,
}

/// Assemble the irregular report: exact quantities, the reserve bounds, and
/// a Monte-Carlo scan of the reserves `{h^i}` with common random numbers.
pub fn irregular_report(inst: &IrregularInstance, mc: &McConfig) -> Result<IrregularReport> {
    let instance = inst.to_instance();
    let ex_ante = inst.ex_ante();
    let seq_posted = irregular_seq_posted(inst);
    let reserve_bounds: Vec<f64> = (1..=inst.n)
        .map(|i| irregular_reserve_bound(inst, i))
        .collect::<Result<_>>()?;

    let candidates: Vec<f64> = (1..=inst.n).map(|i| inst.h.powi(i as i32)).collect();
    let ests = mc_reserve_estimates(&instance, &candidates, mc, true)?;
    let (mut best, mut best_est) = (
        0usize,
        McEstimate {
            mean: f64::NEG_INFINITY,
            stderr: 0.0,
        },
    );
    for (i, e) in ests.iter().enumerate() {
        if e.mean > best_est.mean {
            best = i;
            best_est = *e;
        }
    }
    let lb = uniform_price_lb(&instance, &inst.ex_ante_quantiles())?;
    Ok(IrregularReport {
        n: inst.n,
        h: inst.h,
        ex_ante,
        seq_posted,
        reserve_bounds,
        mc_reserve: McReserveRow {
            reserve: candidates[best],
            revenue: best_est.mean,
            stderr: best_est.stderr,
        },
        ratios: IrregularRatios {
            opt_over_reserve: seq_posted / best_est.mean,
            ex_ante_over_reserve: ex_ante / best_est.mean,
            pricing_approximation: ex_ante / lb,
        },
    })
}
