//! Numeric property suites behind the `verify` subcommand: monotonicity of
//! the calculus functions, the two pairwise inequalities they satisfy, the
//! telescoping identity of canonical assignments, and the benchmark revenue
//! ordering on random triangular instances.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::curves::{Instance, TriAgent};
use crate::error::Result;
use crate::revenue::{ex_ante_rev, myerson_rev_tri, opt_price_rev, PriceSearch};
use crate::worstcase::{calc_q, calc_v, canonical_qbar, check_twist};

/// Outcome of one property over a batch of random trials.
#[derive(Debug, Clone, Serialize)]
pub struct PropertyCheck {
    pub name: String,
    pub trials: usize,
    pub failures: usize,
    /// Property-specific extremum: largest violation, or largest observed
    /// ratio for bound checks.
    pub worst: f64,
}

impl PropertyCheck {
    pub fn passed(&self) -> bool {
        self.failures == 0
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SuiteReport {
    pub checks: Vec<PropertyCheck>,
}

impl SuiteReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(PropertyCheck::passed)
    }
}

/// Log-uniform draw of `p - 1` over `[1e-3, 1e2]`.
fn random_p(rng: &mut impl Rng) -> f64 {
    let t: f64 = rng.random();
    1.0 + 1e-3 * (1e5f64).powf(t)
}

/// Strict decrease of `f` on random ordered pairs.
pub fn monotone_pairs_check(
    name: &str,
    f: impl Fn(f64) -> Result<f64>,
    seed: u64,
    trials: usize,
) -> PropertyCheck {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut failures = 0;
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..trials {
        let a = random_p(&mut rng);
        let b = random_p(&mut rng);
        if (a - b).abs() < 1e-12 {
            continue;
        }
        let (p, pp) = if a < b { (a, b) } else { (b, a) };
        let violation = match (f(p), f(pp)) {
            (Ok(fp), Ok(fpp)) => fpp - fp, // positive means not decreasing
            _ => f64::INFINITY,
        };
        worst = worst.max(violation);
        if violation > -1e-12 {
            failures += 1;
        }
    }
    PropertyCheck {
        name: name.to_string(),
        trials,
        failures,
        worst,
    }
}

/// Strict decrease of `f` on a log-spaced grid over `(1, hi]`.
pub fn monotone_grid_check(
    name: &str,
    f: impl Fn(f64) -> Result<f64>,
    points: usize,
    hi: f64,
) -> PropertyCheck {
    let lo = 1.0 + 1e-6;
    let ratio = (hi / lo).ln();
    let mut failures = 0;
    let mut worst = f64::NEG_INFINITY;
    let mut prev = f64::INFINITY;
    for i in 0..points {
        let p = lo * (ratio * i as f64 / (points - 1) as f64).exp();
        let y = match f(p) {
            Ok(y) => y,
            Err(_) => {
                failures += 1;
                continue;
            }
        };
        let violation = y - prev;
        worst = worst.max(violation);
        if violation > -1e-12 {
            failures += 1;
        }
        prev = y;
    }
    PropertyCheck {
        name: name.to_string(),
        trials: points,
        failures,
        worst,
    }
}

/// `calc_v(p) - calc_v(p') < ln(p/(p-1)) - ln(p'/(p'-1))` on random pairs.
pub fn hbound_check(seed: u64, trials: usize) -> PropertyCheck {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut failures = 0;
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..trials {
        let a = random_p(&mut rng);
        let b = random_p(&mut rng);
        if (a - b).abs() < 1e-12 {
            continue;
        }
        let (p, pp) = if a < b { (a, b) } else { (b, a) };
        let lhs = calc_v(p).unwrap() - calc_v(pp).unwrap();
        let rhs = (p / (p - 1.0)).ln() - (pp / (pp - 1.0)).ln();
        let violation = lhs - rhs;
        worst = worst.max(violation);
        if violation >= 0.0 {
            failures += 1;
        }
    }
    PropertyCheck {
        name: "hbound".into(),
        trials,
        failures,
        worst,
    }
}

/// [`check_twist`] on random pairs.
pub fn twist_check(seed: u64, trials: usize) -> PropertyCheck {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut failures = 0;
    for _ in 0..trials {
        let a = random_p(&mut rng);
        let b = random_p(&mut rng);
        if (a - b).abs() < 1e-9 {
            continue;
        }
        let (p, pp) = if a < b { (a, b) } else { (b, a) };
        if !check_twist(p, pp).unwrap_or(false) {
            failures += 1;
        }
    }
    PropertyCheck {
        name: "twist".into(),
        trials,
        failures,
        worst: f64::NAN,
    }
}

/// Telescoping identity of canonical masses: partial sums of
/// `ln(1 + v q)` reproduce `calc_v` at every prefix, to 1e-10.
pub fn telescoping_check(seed: u64, vectors: usize) -> PropertyCheck {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut failures = 0;
    let mut worst = 0.0f64;
    for _ in 0..vectors {
        let len = rng.random_range(1..=100);
        let mut vals: Vec<f64> = (0..len).map(|_| random_p(&mut rng)).collect();
        vals.sort_by(|a, b| b.total_cmp(a));
        let mut input = vec![f64::INFINITY];
        input.extend(&vals);
        let qs = canonical_qbar(&input).unwrap();
        let mut acc = 0.0;
        let mut bad = false;
        for (v, q) in vals.iter().zip(&qs) {
            acc += (v * q).ln_1p();
            let err = (acc - calc_v(*v).unwrap()).abs();
            worst = worst.max(err);
            if err > 1e-10 {
                bad = true;
            }
        }
        if bad {
            failures += 1;
        }
    }
    PropertyCheck {
        name: "canonical telescoping".into(),
        trials: vectors,
        failures,
        worst,
    }
}

/// Random triangular instance: up to `max_n` agents, values log-uniform in
/// `[1, 100]`, masses scaled to a random total at most one.
pub fn random_tri_instance(rng: &mut impl Rng, max_n: usize) -> Instance {
    let n = rng.random_range(1..=max_n);
    let raw: Vec<f64> = (0..n).map(|_| rng.random::<f64>() + 1e-3).collect();
    let total: f64 = raw.iter().sum();
    let budget: f64 = 0.2 + 0.8 * rng.random::<f64>();
    let agents = raw
        .into_iter()
        .map(|w| {
            let v = 100.0f64.powf(rng.random::<f64>());
            TriAgent::new(v, (w / total * budget).clamp(1e-12, 1.0)).unwrap()
        })
        .collect();
    Instance::from_tri_agents(agents).unwrap()
}

/// Exact benchmark ordering on random triangular instances:
/// `ex_ante >= optimal auction >= optimal anonymous pricing`, 1e-9 slack.
pub fn ordering_check(seed: u64, instances: usize) -> PropertyCheck {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut failures = 0;
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..instances {
        let inst = random_tri_instance(&mut rng, 20);
        let (ea, _) = ex_ante_rev(&inst).unwrap();
        let mye = myerson_rev_tri(&inst).unwrap();
        let (_, price) = opt_price_rev(&inst, &PriceSearch::default()).unwrap();
        let violation = (mye - ea).max(price - mye);
        worst = worst.max(violation);
        if violation > 1e-9 {
            failures += 1;
        }
    }
    PropertyCheck {
        name: "benchmark ordering".into(),
        trials: instances,
        failures,
        worst,
    }
}

/// The worst-case bound on random instances: `ex_ante / opt_price` never
/// exceeds e + 1e-6 (random instances stay far below the supremum).
pub fn ratio_bound_check(seed: u64, instances: usize) -> PropertyCheck {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut failures = 0;
    let mut worst = 0.0f64;
    let bound = std::f64::consts::E + 1e-6;
    for _ in 0..instances {
        let inst = random_tri_instance(&mut rng, 20);
        let (ea, _) = ex_ante_rev(&inst).unwrap();
        let (_, price) = opt_price_rev(&inst, &PriceSearch::default()).unwrap();
        let ratio = ea / price;
        worst = worst.max(ratio);
        if ratio > bound {
            failures += 1;
        }
    }
    PropertyCheck {
        name: "ex ante / pricing ratio bound".into(),
        trials: instances,
        failures,
        worst,
    }
}

/// The full numeric suite behind `verify`: the calculus inequalities on
/// `trials` random points each, plus instance-level checks.
pub fn run_suites(seed: u64, trials: usize) -> SuiteReport {
    let mut checks = vec![
        monotone_pairs_check("value tail monotone", calc_v, seed ^ 0x01, trials),
        monotone_pairs_check("mass tail monotone", calc_q, seed ^ 0x02, trials),
        monotone_pairs_check(
            "value minus mass monotone",
            |p| Ok(calc_v(p)? - calc_q(p)?),
            seed ^ 0x03,
            trials,
        ),
    ];
    checks.push(monotone_grid_check(
        "value tail monotone (grid)",
        calc_v,
        1000,
        1e4,
    ));
    checks.push(monotone_grid_check(
        "mass tail monotone (grid)",
        calc_q,
        1000,
        1e4,
    ));
    checks.push(monotone_grid_check(
        "value minus mass monotone (grid)",
        |p| Ok(calc_v(p)? - calc_q(p)?),
        1000,
        1e4,
    ));
    checks.push(hbound_check(seed ^ 0x04, trials));
    checks.push(twist_check(seed ^ 0x05, trials));
    checks.push(telescoping_check(seed ^ 0x06, 200));
    checks.push(ordering_check(seed ^ 0x07, (trials / 10).max(100)));
    checks.push(ratio_bound_check(seed ^ 0x08, 1000));
    SuiteReport { checks }
}
