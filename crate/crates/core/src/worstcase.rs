//! The V/Q special-function calculus, canonical assignments, the worst-case
//! instance generator, and the tightness/feasibility checker.
//!
//! `calc_v(p)` is the expected atom value carried by the limiting instance
//! above price `p` (excluding the top agent, whose contribution is
//! normalized to one), and `calc_q(p)` is the expected number of atoms
//! realized above `p`. Both decrease in `p`; the constrained optimum
//! `1 + calc_v(calc_q_inverse(1))` is the worst-case ratio of the ex ante
//! relaxation to optimal anonymous pricing.

use std::sync::OnceLock;

use serde::Serialize;

use crate::curves::{GeneratorMetadata, Instance, TriAgent};
use crate::error::{Error, Result};
use crate::quad;
use crate::revenue::price_rev;

/// `calc_v(p) = p * ln(p^2 / (p^2 - 1))` for `p > 1`; positive and strictly
/// decreasing, diverges at 1 and vanishes at infinity.
pub fn calc_v(p: f64) -> Result<f64> {
    guard_p(p)?;
    Ok(p * (p * p / (p * p - 1.0)).ln())
}

/// Derivative of [`calc_v`]: `ln(1 + 1/(p^2-1)) - 2/(p^2-1)`, always negative
/// for `p > 1`.
pub fn calc_v_prime(p: f64) -> Result<f64> {
    guard_p(p)?;
    let x = 1.0 / (p * p - 1.0);
    Ok(x.ln_1p() - 2.0 * x)
}

fn guard_p(p: f64) -> Result<()> {
    if p <= 1.0 || !p.is_finite() {
        return Err(Error::Domain(format!(
            "calculus functions need p > 1, got {p}"
        )));
    }
    Ok(())
}

/// Quadrature and root-finding parameters for the `calc_q` family.
#[derive(Debug, Clone)]
pub struct VqCalculus {
    order: usize,
    root_tol: f64,
    panel_tol: f64,
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl Default for VqCalculus {
    fn default() -> Self {
        Self::new(64, 1e-10)
    }
}

impl VqCalculus {
    pub fn new(order: usize, root_tol: f64) -> Self {
        let (nodes, weights) = quad::gauss_legendre(order.max(2));
        Self {
            order: order.max(2),
            root_tol,
            panel_tol: 1e-12,
            nodes,
            weights,
        }
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// Tail integral of `-calc_v'(v)/v` from `p` to infinity. The
    /// substitution `u = 1/v` maps it onto `(0, 1/p]` where the integrand is
    /// smooth (the tail decays like `v^-3`, so truncation would need huge
    /// cutoffs otherwise).
    pub fn q(&self, p: f64) -> Result<f64> {
        guard_p(p)?;
        let g = |u: f64| {
            if u <= 0.0 {
                return 0.0;
            }
            let v = 1.0 / u;
            let x = 1.0 / (v * v - 1.0);
            -(x.ln_1p() - 2.0 * x) / u
        };
        Ok(quad::integrate_panels(
            &g,
            0.0,
            1.0 / p,
            &self.nodes,
            &self.weights,
            self.panel_tol,
            14,
        ))
    }

    /// Inverse of the strictly decreasing [`VqCalculus::q`] by bracketed
    /// bisection; the bracket is grown on both sides until it straddles
    /// `target`.
    pub fn q_inverse(&self, target: f64) -> Result<f64> {
        if target <= 0.0 || !target.is_finite() {
            return Err(Error::Domain(format!(
                "q_inverse needs target > 0, got {target}"
            )));
        }
        let mut lo = 1.0 + 1e-9;
        while self.q(lo)? < target {
            let gap = (lo - 1.0) / 10.0;
            if gap < 1e-15 {
                return Err(Error::Numeric(format!(
                    "q_inverse target {target} is out of reach"
                )));
            }
            lo = 1.0 + gap;
        }
        let mut hi = 2.0;
        while self.q(hi)? > target {
            hi *= 2.0;
            if hi > 1e60 {
                return Err(Error::Numeric("q_inverse bracket exploded".into()));
            }
        }
        let mut mid = 0.5 * (lo + hi);
        for _ in 0..200 {
            mid = 0.5 * (lo + hi);
            let qm = self.q(mid)?;
            if (qm - target).abs() <= self.root_tol {
                return Ok(mid);
            }
            if qm > target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(mid)
    }
}

fn default_calculus() -> &'static VqCalculus {
    static CALC: OnceLock<VqCalculus> = OnceLock::new();
    CALC.get_or_init(VqCalculus::default)
}

/// [`VqCalculus::q`] with default parameters (64-node panels, 1e-10 root
/// tolerance).
pub fn calc_q(p: f64) -> Result<f64> {
    default_calculus().q(p)
}

/// [`VqCalculus::q_inverse`] with default parameters.
pub fn calc_q_inverse(target: f64) -> Result<f64> {
    default_calculus().q_inverse(target)
}

/// Canonical atom masses for a descending value vector whose first entry is
/// the `+inf` sentinel: `q_k = (exp(v(v_k) - v(v_{k-1})) - 1) / v_k`. By
/// construction the partial sums of `ln(1 + v_k q_k)` telescope to
/// `calc_v(v_k)`.
pub fn canonical_qbar(vbars: &[f64]) -> Result<Vec<f64>> {
    if vbars.len() < 2 {
        return Err(Error::Config(
            "canonical assignment needs the sentinel plus one value".into(),
        ));
    }
    if !vbars[0].is_infinite() || vbars[0] < 0.0 {
        return Err(Error::Config(
            "first entry must be the +inf sentinel".into(),
        ));
    }
    for w in vbars[1..].windows(2) {
        if w[1] > w[0] || w[1].is_nan() {
            return Err(Error::Config(format!(
                "values must be nonincreasing, got {} < {}",
                w[0], w[1]
            )));
        }
    }
    let mut out = Vec::with_capacity(vbars.len() - 1);
    let mut v_prev = 0.0; // calc_v(inf) = 0
    for &v in &vbars[1..] {
        let vv = calc_v(v)?;
        out.push((vv - v_prev).exp_m1() / v);
        v_prev = vv;
    }
    Ok(out)
}

/// Both inequalities relating a canonical mass to the calculus increments:
/// with `q = (exp(v(p) - v(p')) - 1)/p`,
/// `q - (Q(p) - Q(p')) >= p q - (V(p) - V(p')) >= 0` within 1e-9 slack.
pub fn check_twist(p: f64, p_prime: f64) -> Result<bool> {
    if !(p_prime > p && p > 1.0) {
        return Err(Error::Domain(format!(
            "check_twist needs p' > p > 1, got ({p}, {p_prime})"
        )));
    }
    let dv = calc_v(p)? - calc_v(p_prime)?;
    let q = dv.exp_m1() / p;
    let dq = calc_q(p)? - calc_q(p_prime)?;
    let lhs = q - dq;
    let mid = p * q - dv;
    Ok(lhs >= mid - 1e-9 && mid >= -1e-9)
}

/// Value of the limiting program at price `p`: `1 + calc_v(p)` when the unit
/// capacity constraint `calc_q(p) <= 1` holds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ContinuumObjective {
    Feasible { value: f64, mass: f64 },
    Infeasible { mass: f64 },
}

pub fn continuum_objective(p: f64) -> Result<ContinuumObjective> {
    let mass = calc_q(p)?;
    if mass <= 1.0 {
        Ok(ContinuumObjective::Feasible {
            value: 1.0 + calc_v(p)?,
            mass,
        })
    } else {
        Ok(ContinuumObjective::Infeasible { mass })
    }
}

/// Parameters of the worst-case instance generator.
///
/// Masses follow the arithmetic progression `top_mass, d, 2d, ..., (n-1)d`
/// with `d = 2(1 - top_mass)/(n(n-1))`, so the whole unit of ex ante mass is
/// spent. Values are pinned one at a time by bisection so that the pricing
/// revenue at every atom equals one.
#[derive(Debug, Clone, Copy)]
pub struct GeneratorConfig {
    /// Number of agents, at least 2.
    pub n: usize,
    /// Mass of the top (highest-value) agent; its value is `1/top_mass`.
    pub top_mass: f64,
    /// Bisection tolerance on the tight pricing revenue.
    pub tol: f64,
    /// Guard on the largest representable value, `1/top_mass` must not
    /// exceed it.
    pub max_value: f64,
}

pub const GENERATOR_VERSION: u32 = 1;

impl GeneratorConfig {
    pub fn new(n: usize) -> Self {
        Self {
            n,
            top_mass: 1e-6,
            tol: 1e-10,
            max_value: 1e8,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::Config(format!(
                "generator needs n >= 2, got {}",
                self.n
            )));
        }
        if !(self.top_mass > 0.0 && self.top_mass < 1.0) {
            return Err(Error::Config(format!(
                "top_mass must be in (0,1), got {}",
                self.top_mass
            )));
        }
        if 1.0 / self.top_mass > self.max_value {
            return Err(Error::Config(format!(
                "top value 1/top_mass = {} exceeds max_value = {}",
                1.0 / self.top_mass,
                self.max_value
            )));
        }
        if self.tol <= 0.0 || self.tol.is_nan() {
            return Err(Error::Config("tolerance must be positive".into()));
        }
        Ok(())
    }

    /// Step of the arithmetic mass progression.
    pub fn step(&self) -> f64 {
        2.0 * (1.0 - self.top_mass) / (self.n as f64 * (self.n as f64 - 1.0))
    }
}

/// Left CDF factor of a triangular agent at price `p <= vbar`.
#[inline]
fn tri_factor(vbar: f64, qbar: f64, p: f64) -> f64 {
    let num = p * (1.0 - qbar);
    num / (num + vbar * qbar)
}

/// Pricing revenue of the partial instance `agents + Tri(x, q)` evaluated at
/// its own atom price `x`. All prior values exceed `x`, so every factor is a
/// continuous-part factor except the candidate's own `1 - q`.
fn tight_rev(agents: &[(f64, f64)], q: f64, x: f64) -> f64 {
    let mut prod = 1.0 - q;
    for &(v, m) in agents {
        prod *= tri_factor(v, m, x);
    }
    x * (1.0 - prod)
}

/// Build the `n`-agent worst-case instance: the top agent `Tri(1/top_mass,
/// top_mass)` normalizes optimal pricing revenue to one, and each further
/// agent's value is found by bisection in `(1, v_{k-1})` so the pricing
/// revenue at that value is exactly one.
pub fn generate_worstcase(config: &GeneratorConfig) -> Result<Instance> {
    config.validate()?;
    let n = config.n;
    let d = config.step();
    let mut agents: Vec<(f64, f64)> = Vec::with_capacity(n);
    agents.push((1.0 / config.top_mass, config.top_mass));

    for k in 2..=n {
        let q = (k - 1) as f64 * d;
        let prefix = &agents[..k - 1];
        let mut lo = 1.0 + 1e-12;
        let mut hi = agents[k - 2].0;
        let rev_lo = tight_rev(prefix, q, lo);
        let rev_hi = tight_rev(prefix, q, hi);
        if rev_lo >= 1.0 || rev_lo.is_nan() {
            return Err(Error::Bisection {
                agent: k,
                reason: format!("revenue at the lower bracket is already {rev_lo:.6} >= 1"),
            });
        }
        if rev_hi <= 1.0 || rev_hi.is_nan() {
            return Err(Error::Bisection {
                agent: k,
                reason: format!("revenue at the upper bracket is only {rev_hi:.6} <= 1"),
            });
        }
        // the search assumes the tight revenue grows with the candidate
        // value; spot-check before trusting bisection
        let mut prev = rev_lo;
        for i in 1..=4 {
            let x = lo + (hi - lo) * i as f64 / 5.0;
            let r = tight_rev(prefix, q, x);
            if r < prev - 1e-9 {
                return Err(Error::Bisection {
                    agent: k,
                    reason: format!("tight revenue is not monotone near x = {x:.6}"),
                });
            }
            prev = r;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if tight_rev(prefix, q, mid) < 1.0 {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= config.tol * hi.max(1.0) {
                break;
            }
        }
        agents.push((0.5 * (lo + hi), q));
    }

    let tri = agents
        .into_iter()
        .map(|(v, q)| TriAgent::new(v, q))
        .collect::<Result<Vec<_>>>()?;
    let instance = Instance::from_tri_agents(tri)?.with_metadata(GeneratorMetadata {
        n,
        top_mass: config.top_mass,
        tolerance: config.tol,
        generator_version: GENERATOR_VERSION,
    });

    let report = feasibility_check(&instance)?;
    if !report.feasible {
        return Err(Error::Numeric(format!(
            "generated instance is infeasible: excess {:.3e} at price {:.6}",
            report.worst_excess, report.worst_price
        )));
    }
    Ok(instance)
}

/// Outcome of checking a triangular instance against unit mass and the unit
/// pricing-revenue cap.
#[derive(Debug, Clone, Serialize)]
pub struct FeasibilityReport {
    pub mass_total: f64,
    pub mass_ok: bool,
    /// Largest value of `price_rev - 1` seen on the price grid.
    pub worst_excess: f64,
    /// Price attaining `worst_excess`.
    pub worst_price: f64,
    pub feasible: bool,
}

pub const FEASIBILITY_GRID: usize = 10_000;
pub const FEASIBILITY_SLACK: f64 = 1e-8;

/// Verify that a triangular instance satisfies the worst-case program
/// constraints: total mass at most one and pricing revenue at most one at
/// every atom and on a dense log grid over `[1, max vbar]`.
pub fn feasibility_check(instance: &Instance) -> Result<FeasibilityReport> {
    let tri = instance.tri_agents()?;
    let mass_total: f64 = tri.iter().map(|t| t.qbar()).sum();
    let mass_ok = mass_total <= 1.0 + 1e-9;

    let vmax = tri.iter().map(|t| t.vbar()).fold(1.0f64, f64::max);
    let mut worst_excess = f64::NEG_INFINITY;
    let mut worst_price = 1.0;
    let mut probe = |p: f64| {
        let excess = price_rev(instance, p) - 1.0;
        if excess > worst_excess {
            worst_excess = excess;
            worst_price = p;
        }
    };
    for t in &tri {
        probe(t.vbar());
    }
    let log_max = vmax.ln();
    for i in 0..FEASIBILITY_GRID {
        probe((log_max * i as f64 / (FEASIBILITY_GRID - 1) as f64).exp());
    }
    Ok(FeasibilityReport {
        mass_total,
        mass_ok,
        worst_excess,
        worst_price,
        feasible: mass_ok && worst_excess <= FEASIBILITY_SLACK,
    })
}
