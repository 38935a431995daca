//! The four benchmark revenues (anonymous pricing, ex ante relaxation,
//! optimal auction, second price with anonymous reserve), sequential posted
//! pricing, and the ratio report that compares them.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::curves::{Agent, Instance};
use crate::error::{Error, Result};

/// Expected revenue of posting the anonymous price `p`: the item sells iff
/// some agent values it at least `p`, so the revenue is
/// `p * (1 - prod_i Pr[v_i < p])`. Atoms accept a price equal to their own
/// value. The no-sale product is carried in log space: near the top of the
/// support the sale probability is of order `1/p`, and the direct product
/// would cancel to noise exactly where `p` amplifies it.
pub fn price_rev(instance: &Instance, p: f64) -> f64 {
    let mut log_miss = 0.0;
    for a in instance.agents() {
        let sp = a.sale_prob(p);
        if sp >= 1.0 {
            return p;
        }
        log_miss += (-sp).ln_1p();
    }
    p * -log_miss.exp_m1()
}

/// Grid parameters for the general-instance price search.
#[derive(Debug, Clone, Copy)]
pub struct PriceSearch {
    /// Points of the coarse log-spaced scan.
    pub grid: usize,
    /// Golden-section iterations of the refinement step.
    pub refine_iters: usize,
}

impl Default for PriceSearch {
    fn default() -> Self {
        Self {
            grid: 256,
            refine_iters: 96,
        }
    }
}

/// Finite price anchor per agent: top of support, or a deep tail quantile
/// for unbounded supports.
fn price_anchor(agent: &Agent) -> f64 {
    let m = agent.support_max();
    if m.is_finite() {
        m
    } else {
        agent.price_at_quantile(1e-9)
    }
}

/// Optimal anonymous pricing: for all-triangular instances the maximizer is
/// one of the atom values, so the finite candidate set is scanned exactly;
/// otherwise a coarse log-spaced grid is refined by golden section.
pub fn opt_price_rev(instance: &Instance, search: &PriceSearch) -> Result<(f64, f64)> {
    if instance.is_empty() {
        return Err(Error::Config(
            "opt_price_rev needs a nonempty instance".into(),
        ));
    }
    let mut candidates: Vec<f64> = instance
        .agents()
        .iter()
        .filter_map(|a| a.as_tri().map(|t| t.vbar()))
        .collect();
    if instance.is_all_tri() {
        return Ok(best_candidate(instance, &candidates));
    }

    // revenue has a kink or jump at every atom and monopoly price, so those
    // points join the coarse grid as candidates
    for a in instance.agents() {
        let m = a.support_max();
        if m.is_finite() {
            candidates.push(m);
        }
        candidates.push(a.price_at_quantile(a.monopoly_quantile()));
    }
    let hi = instance
        .agents()
        .iter()
        .map(price_anchor)
        .fold(0.0f64, f64::max);
    let lo = (instance
        .agents()
        .iter()
        .map(|a| a.price_at_quantile(a.monopoly_quantile()))
        .fold(f64::INFINITY, f64::min)
        / 4.0)
        .max(hi * 1e-9);
    let grid = search.grid.max(8);
    let ratio = (hi / lo).ln();
    candidates.extend((0..grid).map(|i| lo * (ratio * i as f64 / (grid - 1) as f64).exp()));
    let (mut best_p, mut best_r) = best_candidate(instance, &candidates);

    // golden-section pass around the best coarse point
    let step = (hi / lo).powf(1.0 / (grid - 1) as f64);
    let (mut a, mut b) = (best_p / step, best_p * step);
    let phi = (5.0f64.sqrt() - 1.0) / 2.0;
    let mut c = b - phi * (b - a);
    let mut d = a + phi * (b - a);
    let mut fc = price_rev(instance, c);
    let mut fd = price_rev(instance, d);
    for _ in 0..search.refine_iters {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - phi * (b - a);
            fc = price_rev(instance, c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + phi * (b - a);
            fd = price_rev(instance, d);
        }
    }
    let p = 0.5 * (a + b);
    let r = price_rev(instance, p);
    if r > best_r {
        best_p = p;
        best_r = r;
    }
    Ok((best_p, best_r))
}

fn best_candidate(instance: &Instance, candidates: &[f64]) -> (f64, f64) {
    let mut sorted: Vec<f64> = candidates.iter().copied().filter(|p| *p > 0.0).collect();
    sorted.sort_by(f64::total_cmp);
    let mut best = (sorted[0], f64::NEG_INFINITY);
    for &p in &sorted {
        let r = price_rev(instance, p);
        if r > best.1 {
            best = (p, r);
        }
    }
    best
}

/// Per-agent quantile demand at marginal price `lambda`: the `q` maximizing
/// `R(q) - lambda * q`. Piecewise-linear curves give a set-valued response
/// at their kink; callers resolve that by fractional fill.
fn demand(agent: &Agent, lambda: f64) -> f64 {
    match *agent {
        Agent::Tri(t) => {
            if lambda < t.vbar() {
                t.qbar()
            } else {
                0.0
            }
        }
        Agent::Uniform { lo, hi } => {
            // R'(q) = hi - 2q(hi - lo) = lambda, capped at the curve apex
            let apex = (hi / (2.0 * (hi - lo))).min(1.0);
            ((hi - lambda) / (2.0 * (hi - lo))).clamp(0.0, apex)
        }
        // R'(q) = -(ln q + 1)/rate = lambda  =>  q = exp(-1 - lambda*rate)
        Agent::Exponential { rate } => (-1.0 - lambda * rate).exp(),
        Agent::TwoPoint { .. } => 0.0, // rejected upstream
    }
}

/// Ex ante relaxation: maximize the summed revenue curves subject to one
/// unit of total service probability. Solved by water-filling: bisection on
/// a multiplier `lambda >= 0` against the aggregate demand, with fractional
/// fill across agents whose curves are flat at the final multiplier.
pub fn ex_ante_rev(instance: &Instance) -> Result<(f64, Vec<f64>)> {
    for a in instance.agents() {
        if !a.is_regular() {
            return Err(Error::Irregular);
        }
    }
    let agents = instance.agents();
    let total: f64 = agents.iter().map(|a| demand(a, 0.0)).sum();
    if total <= 1.0 {
        let qs: Vec<f64> = agents.iter().map(|a| demand(a, 0.0)).collect();
        let rev = curve_sum(agents, &qs)?;
        return Ok((rev, qs));
    }

    // smallest lambda with aggregate demand at most one
    let mut hi = agents
        .iter()
        .map(|a| match a {
            Agent::Tri(t) => t.vbar(),
            Agent::Uniform { hi, .. } => *hi,
            Agent::Exponential { .. } => 1.0,
            Agent::TwoPoint { .. } => 0.0,
        })
        .fold(1.0f64, f64::max);
    while agents.iter().map(|a| demand(a, hi)).sum::<f64>() > 1.0 {
        hi *= 2.0;
        if hi > 1e300 {
            return Err(Error::Numeric("water-filling multiplier exploded".into()));
        }
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if agents.iter().map(|a| demand(a, mid)).sum::<f64>() > 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-12 {
            break;
        }
    }

    let eps = 1e-9 * (1.0 + hi);
    let mut qs: Vec<f64> = agents.iter().map(|a| demand(a, hi + eps)).collect();
    let mut shortfall = 1.0 - qs.iter().sum::<f64>();
    // degenerate flat segments at the final multiplier take the leftovers
    for (i, a) in agents.iter().enumerate() {
        if shortfall <= 0.0 {
            break;
        }
        let cap = demand(a, lo - eps) - qs[i];
        if cap > 0.0 {
            let take = cap.min(shortfall);
            qs[i] += take;
            shortfall -= take;
        }
    }
    let rev = curve_sum(agents, &qs)?;
    Ok((rev, qs))
}

fn curve_sum(agents: &[Agent], qs: &[f64]) -> Result<f64> {
    let mut rev = 0.0;
    for (a, &q) in agents.iter().zip(qs) {
        rev += a.revenue_curve().eval(q)?;
    }
    Ok(rev)
}

/// Exact optimal-auction revenue of a triangular instance. In quantile space
/// the marginal revenue of a triangular agent equals `vbar` on its atom and
/// is negative below it, so the optimal auction serves the realized atom of
/// largest value and nothing else:
/// `sum_i vbar_i qbar_i prod_{j before i} (1 - qbar_j)` in descending value
/// order (ties broken by position; the sum is invariant to that choice).
pub fn myerson_rev_tri(instance: &Instance) -> Result<f64> {
    let tri = instance.tri_agents()?;
    let mut order: Vec<usize> = (0..tri.len()).collect();
    order.sort_by(|&a, &b| tri[b].vbar().total_cmp(&tri[a].vbar()).then(a.cmp(&b)));
    let mut rev = 0.0;
    let mut survival = 1.0;
    for &i in &order {
        rev += tri[i].vbar() * tri[i].qbar() * survival;
        survival *= 1.0 - tri[i].qbar();
    }
    Ok(rev)
}

/// Sequential posted pricing: offer `prices[i]` to agent `i` in order until
/// someone accepts. Requires one price per agent, sorted descending to match
/// the agent ordering.
pub fn seq_posted_rev(instance: &Instance, prices: &[f64]) -> Result<f64> {
    if prices.len() != instance.len() {
        return Err(Error::Config(format!(
            "need one price per agent: {} prices for {} agents",
            prices.len(),
            instance.len()
        )));
    }
    if prices.windows(2).any(|w| w[1] > w[0] + 1e-12) {
        return Err(Error::Config("prices must be nonincreasing".into()));
    }
    let mut rev = 0.0;
    let mut no_sale = 1.0;
    for (a, &p) in instance.agents().iter().zip(prices) {
        let accept = a.sale_prob(p);
        rev += p * accept * no_sale;
        no_sale *= 1.0 - accept;
    }
    Ok(rev)
}

/// Monte-Carlo budget. Estimates are deterministic functions of
/// `(seed, samples, chunks)`: chunk `c` draws from the ChaCha stream `c` of
/// the seed, and chunk means are reduced in chunk order, so results do not
/// depend on the number of worker threads.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct McConfig {
    pub samples: u64,
    pub seed: u64,
    pub chunks: u32,
}

impl Default for McConfig {
    fn default() -> Self {
        Self {
            samples: 1_000_000,
            seed: 42,
            chunks: 64,
        }
    }
}

impl McConfig {
    pub fn new(samples: u64, seed: u64) -> Self {
        Self {
            samples,
            seed,
            chunks: 64,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.samples == 0 {
            return Err(Error::Config("samples must be at least 1".into()));
        }
        if self.chunks == 0 || self.chunks as u64 > self.samples {
            return Err(Error::Config(format!(
                "chunks must lie in [1, samples], got {} chunks for {} samples",
                self.chunks, self.samples
            )));
        }
        Ok(())
    }
}

/// A Monte-Carlo mean with its standard error (zero when the value is
/// computed exactly).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub mean: f64,
    pub stderr: f64,
}

/// Expected payment of the second-price auction with reserve `r`, given that
/// the sampled agents realized maximum `m` and second maximum `m2`, with the
/// conditioned agent integrated analytically.
fn conditional_payment(top: &Agent, r: f64, m: f64, m2: f64) -> f64 {
    if m < r {
        // only the conditioned agent can clear the reserve
        return r * top.sale_prob(r);
    }
    let m2r = m2.max(r);
    m * (1.0 - top.cdf(m)) + m2r * top.cdf(m2r) + top.partial_mean(m2r, m)
}

/// Unbiased estimates of the reserve revenue
/// `E[1{max v >= r} * max(second-highest v, r)]` for every reserve in
/// `reserves`, sharing one sample matrix across reserves (common random
/// numbers).
///
/// With `integrate_top` set, the agent with the largest support is not
/// sampled; its contribution is integrated in closed form per sample. That
/// keeps the estimator unbiased while removing the variance of rare
/// high-value atoms, and reduces to the exact `r * Pr[v >= r]` (zero
/// standard error) for single-agent instances.
pub fn mc_reserve_estimates(
    instance: &Instance,
    reserves: &[f64],
    mc: &McConfig,
    integrate_top: bool,
) -> Result<Vec<McEstimate>> {
    mc.validate()?;
    if reserves.is_empty() {
        return Err(Error::Config("empty reserve candidate set".into()));
    }
    if reserves.iter().any(|&r| r <= 0.0 || r.is_nan()) {
        return Err(Error::Domain("reserves must be positive".into()));
    }

    let agents = instance.agents();
    let top_idx = if integrate_top {
        let mut idx = 0usize;
        for (i, a) in agents.iter().enumerate() {
            if a.support_max() > agents[idx].support_max() {
                idx = i;
            }
        }
        Some(idx)
    } else {
        None
    };
    let sampled: Vec<Agent> = agents
        .iter()
        .enumerate()
        .filter(|(i, _)| Some(*i) != top_idx)
        .map(|(_, a)| *a)
        .collect();
    let top = top_idx.map(|i| agents[i]);

    // ascending candidate order for the banded accumulation; results are
    // mapped back to the caller's order at the end
    let mut order: Vec<usize> = (0..reserves.len()).collect();
    order.sort_by(|&a, &b| reserves[a].total_cmp(&reserves[b]));
    let sorted: Vec<f64> = order.iter().map(|&i| reserves[i]).collect();

    if sampled.is_empty() {
        // nothing stochastic remains: the estimate is the closed form
        let top = top.expect("integrate_top with one agent");
        let mut out = vec![
            McEstimate {
                mean: 0.0,
                stderr: 0.0
            };
            reserves.len()
        ];
        for (&dst, &r) in order.iter().zip(&sorted) {
            out[dst] = McEstimate {
                mean: r * top.sale_prob(r),
                stderr: 0.0,
            };
        }
        return Ok(out);
    }

    let base = mc.samples / mc.chunks as u64;
    let rem = mc.samples % mc.chunks as u64;
    let chunk_sums: Vec<Vec<f64>> = (0..mc.chunks)
        .into_par_iter()
        .map(|c| {
            let size = base + u64::from((c as u64) < rem);
            let mut rng = ChaCha8Rng::seed_from_u64(mc.seed);
            rng.set_stream(c as u64);
            let mut sums = vec![0.0f64; sorted.len()];
            for _ in 0..size {
                let mut m = f64::NEG_INFINITY;
                let mut m2 = f64::NEG_INFINITY;
                for a in &sampled {
                    let v = a.sample(rng.random::<f64>());
                    if v > m {
                        m2 = m;
                        m = v;
                    } else if v > m2 {
                        m2 = v;
                    }
                }
                match &top {
                    Some(t) => accumulate_conditional(&mut sums, &sorted, t, m, m2),
                    None => accumulate_plain(&mut sums, &sorted, m, m2),
                }
            }
            sums
        })
        .collect();

    let mut means = vec![0.0f64; sorted.len()];
    let mut chunk_means: Vec<Vec<f64>> = Vec::with_capacity(mc.chunks as usize);
    for (c, sums) in chunk_sums.iter().enumerate() {
        let size = (base + u64::from((c as u64) < rem)) as f64;
        let w = size / mc.samples as f64;
        let cm: Vec<f64> = sums.iter().map(|s| s / size).collect();
        for (m, &v) in means.iter_mut().zip(&cm) {
            *m += w * v;
        }
        chunk_means.push(cm);
    }
    let cc = mc.chunks as f64;
    let mut out = vec![
        McEstimate {
            mean: 0.0,
            stderr: 0.0
        };
        reserves.len()
    ];
    for (j, (&dst, _)) in order.iter().zip(&sorted).enumerate() {
        let stderr = if mc.chunks > 1 {
            let var: f64 = chunk_means
                .iter()
                .enumerate()
                .map(|(c, cm)| {
                    let size = (base + u64::from((c as u64) < rem)) as f64;
                    let w = size / mc.samples as f64;
                    w * w * (cm[j] - means[j]).powi(2)
                })
                .sum::<f64>()
                * cc
                / (cc - 1.0);
            var.sqrt()
        } else {
            0.0
        };
        out[dst] = McEstimate {
            mean: means[j],
            stderr,
        };
    }
    Ok(out)
}

/// Add this sample's conditional payments into the per-reserve sums.
/// Reserves are sorted ascending; payments are constant for `r <= m2` and
/// closed-form for `r > m`, so only the middle band costs per-candidate
/// work.
fn accumulate_conditional(sums: &mut [f64], sorted: &[f64], top: &Agent, m: f64, m2: f64) {
    let lo = sorted.partition_point(|&r| r <= m2);
    let hi = sorted.partition_point(|&r| r <= m);
    if lo > 0 {
        // r <= m2 makes max(m2, r) = m2: identical payment for the whole band
        let pay = conditional_payment(top, sorted[0], m, m2);
        for s in &mut sums[..lo] {
            *s += pay;
        }
    }
    for j in lo..hi {
        sums[j] += conditional_payment(top, sorted[j], m, m2);
    }
    for j in hi..sorted.len() {
        sums[j] += sorted[j] * top.sale_prob(sorted[j]);
    }
}

fn accumulate_plain(sums: &mut [f64], sorted: &[f64], m: f64, m2: f64) {
    let lo = sorted.partition_point(|&r| r <= m2);
    let hi = sorted.partition_point(|&r| r <= m);
    for s in &mut sums[..lo] {
        *s += m2;
    }
    for (s, &r) in sums[lo..hi].iter_mut().zip(&sorted[lo..hi]) {
        *s += r;
    }
}

/// Reserve revenue of the second-price auction with reserve `r`. Single
/// agents use the exact closed form `r * (1 - F(r^-))`; larger instances use
/// the conditional Monte-Carlo engine.
pub fn reserve_rev_mc(instance: &Instance, reserve: f64, mc: &McConfig) -> Result<McEstimate> {
    if reserve <= 0.0 || reserve.is_nan() {
        return Err(Error::Domain(format!(
            "reserve must be positive, got {reserve}"
        )));
    }
    Ok(mc_reserve_estimates(instance, &[reserve], mc, true)?[0])
}

/// Default geometric grid size for automatic reserve candidates.
const AUTO_GRID: usize = 64;

/// Automatic reserve candidates: every agent's value anchor plus a geometric
/// grid spanning `[min anchor / 4, max anchor]`.
pub fn auto_reserve_candidates(instance: &Instance) -> Vec<f64> {
    let anchors: Vec<f64> = instance.agents().iter().map(price_anchor).collect();
    let lo = anchors.iter().copied().fold(f64::INFINITY, f64::min) / 4.0;
    let hi = anchors.iter().copied().fold(0.0f64, f64::max);
    let mut out = anchors;
    let ratio = (hi / lo).ln();
    out.extend((0..AUTO_GRID).map(|i| lo * (ratio * i as f64 / (AUTO_GRID - 1) as f64).exp()));
    out.sort_by(f64::total_cmp);
    out.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * b.abs());
    out
}

/// Optimized anonymous reserve: evaluate every candidate on one common
/// sample matrix and keep the best estimate. Returns the winning reserve
/// with its estimate.
pub fn opt_reserve_rev_mc(
    instance: &Instance,
    candidates: Option<&[f64]>,
    mc: &McConfig,
) -> Result<(f64, McEstimate)> {
    let auto;
    let cands = match candidates {
        Some(c) => c,
        None => {
            auto = auto_reserve_candidates(instance);
            &auto
        }
    };
    if cands.is_empty() {
        return Err(Error::Config("empty reserve candidate set".into()));
    }
    let ests = mc_reserve_estimates(instance, cands, mc, true)?;
    let mut best = 0usize;
    for (i, e) in ests.iter().enumerate() {
        if e.mean > ests[best].mean {
            best = i;
        }
    }
    Ok((cands[best], ests[best]))
}

/// The four benchmark revenues and their ratios for one instance.
///
/// `opt_auction` is exact and only available for all-triangular instances;
/// elsewhere it is `None` and the ex ante relaxation stands in as the upper
/// bound.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RatioReport {
    pub n: usize,
    pub ex_ante: f64,
    pub opt_auction: Option<f64>,
    pub opt_reserve: f64,
    pub opt_reserve_stderr: f64,
    pub opt_price: f64,
    pub ratio_exante_price: f64,
    pub ratio_opt_price: Option<f64>,
    pub ratio_opt_reserve: Option<f64>,
}

impl RatioReport {
    pub fn csv_header() -> &'static str {
        "n,ex_ante,opt_auction,opt_reserve,opt_reserve_stderr,opt_price,ratio_exante_price,ratio_opt_price,ratio_opt_reserve"
    }

    pub fn csv_row(&self) -> String {
        let opt_field = |v: Option<f64>| v.map(|x| format!("{x:.6}")).unwrap_or_default();
        format!(
            "{},{:.6},{},{:.6},{:.6},{:.6},{:.6},{},{}",
            self.n,
            self.ex_ante,
            opt_field(self.opt_auction),
            self.opt_reserve,
            self.opt_reserve_stderr,
            self.opt_price,
            self.ratio_exante_price,
            opt_field(self.ratio_opt_price),
            opt_field(self.ratio_opt_reserve),
        )
    }

    /// The benchmark ordering, with three standard errors of slack around
    /// the Monte-Carlo quantity.
    pub fn ordering_ok(&self) -> bool {
        let slack = 3.0 * self.opt_reserve_stderr + 1e-9;
        let upper = self.opt_auction.unwrap_or(self.ex_ante);
        self.opt_auction.is_none_or(|m| self.ex_ante >= m - 1e-9)
            && upper >= self.opt_reserve - slack
            && self.opt_reserve >= self.opt_price - slack
    }
}

/// Assemble a [`RatioReport`]: exact ex ante, optimal auction (triangular
/// instances only), optimal anonymous price, and the optimized reserve
/// estimate.
pub fn ratio_report(instance: &Instance, mc: &McConfig) -> Result<RatioReport> {
    let (ex_ante, _) = ex_ante_rev(instance)?;
    let (_, opt_price) = opt_price_rev(instance, &PriceSearch::default())?;
    let opt_auction = if instance.is_all_tri() {
        Some(myerson_rev_tri(instance)?)
    } else {
        None
    };
    let (_, reserve_est) = opt_reserve_rev_mc(instance, None, mc)?;
    Ok(RatioReport {
        n: instance.len(),
        ex_ante,
        opt_auction,
        opt_reserve: reserve_est.mean,
        opt_reserve_stderr: reserve_est.stderr,
        opt_price,
        ratio_exante_price: ex_ante / opt_price,
        ratio_opt_price: opt_auction.map(|m| m / opt_price),
        ratio_opt_reserve: opt_auction.map(|m| m / reserve_est.mean),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curves::TriAgent;

    fn tri_instance(spec: &[(f64, f64)]) -> Instance {
        Instance::from_tri_agents(
            spec.iter()
                .map(|&(v, q)| TriAgent::new(v, q).unwrap())
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn price_rev_examples() {
        let one = tri_instance(&[(2.0, 0.5)]);
        assert!((price_rev(&one, 2.0) - 1.0).abs() < 1e-15);
        assert!((price_rev(&one, 1.0) - 2.0 / 3.0).abs() < 1e-15);
        let two = tri_instance(&[(2.0, 0.5), (2.0, 0.5)]);
        assert!((price_rev(&two, 2.0) - 1.5).abs() < 1e-15);
    }

    #[test]
    fn opt_price_picks_the_atom() {
        let one = tri_instance(&[(2.0, 0.5)]);
        let (p, r) = opt_price_rev(&one, &PriceSearch::default()).unwrap();
        assert_eq!(p, 2.0);
        assert!((r - 1.0).abs() < 1e-15);

        let det = tri_instance(&[(3.5, 1.0)]);
        let (p, r) = opt_price_rev(&det, &PriceSearch::default()).unwrap();
        assert_eq!(p, 3.5);
        assert!((r - 3.5).abs() < 1e-15);
    }

    #[test]
    fn opt_price_on_general_instances() {
        // uniform(0,1): R(q) = q(1-q), optimum at price 1/2 with revenue 1/4
        let inst = Instance::new(vec![Agent::Uniform { lo: 0.0, hi: 1.0 }]).unwrap();
        let (p, r) = opt_price_rev(&inst, &PriceSearch::default()).unwrap();
        assert!((p - 0.5).abs() < 1e-6, "price {p}");
        assert!((r - 0.25).abs() < 1e-9);
    }

    #[test]
    fn ex_ante_triangular_cases() {
        let (rev, qs) = ex_ante_rev(&tri_instance(&[(2.0, 0.5), (1.0, 0.5)])).unwrap();
        assert!((rev - 1.5).abs() < 1e-12);
        assert_eq!(qs, vec![0.5, 0.5]);

        let (rev, qs) = ex_ante_rev(&tri_instance(&[(2.0, 0.5)])).unwrap();
        assert!((rev - 1.0).abs() < 1e-12);
        assert_eq!(qs, vec![0.5]);

        // over-capacity: fill the steep curve, then the shallow one
        let (rev, qs) = ex_ante_rev(&tri_instance(&[(2.0, 0.8), (1.0, 0.8)])).unwrap();
        assert!((rev - 1.8).abs() < 1e-9, "rev {rev}");
        assert!((qs[0] - 0.8).abs() < 1e-9);
        assert!((qs[1] - 0.2).abs() < 1e-9);
    }

    #[test]
    fn ex_ante_rejects_irregular() {
        let inst = Instance::new(vec![Agent::TwoPoint {
            value: 10.0,
            prob: 0.1,
        }])
        .unwrap();
        assert!(matches!(ex_ante_rev(&inst), Err(Error::Irregular)));
    }

    #[test]
    fn myerson_examples() {
        assert!((myerson_rev_tri(&tri_instance(&[(2.0, 0.5)])).unwrap() - 1.0).abs() < 1e-15);
        // two agents: 2*0.5 + 1*0.5*0.5
        let two = tri_instance(&[(2.0, 0.5), (1.0, 0.5)]);
        assert!((myerson_rev_tri(&two).unwrap() - 1.25).abs() < 1e-15);
        // three identical agents with vbar*qbar = 1/3 each
        let three = tri_instance(&[(1.0, 1.0 / 3.0); 3]);
        assert!((myerson_rev_tri(&three).unwrap() - 19.0 / 27.0).abs() < 1e-15);
        assert!(myerson_rev_tri(
            &Instance::new(vec![Agent::Uniform { lo: 0.0, hi: 1.0 }]).unwrap()
        )
        .is_err());
    }

    #[test]
    fn myerson_is_order_invariant_under_ties() {
        let a = tri_instance(&[(2.0, 0.3), (2.0, 0.6)]);
        let b = tri_instance(&[(2.0, 0.6), (2.0, 0.3)]);
        assert!((myerson_rev_tri(&a).unwrap() - myerson_rev_tri(&b).unwrap()).abs() < 1e-15);
    }

    #[test]
    fn seq_posted_matches_myerson_on_sorted_atoms() {
        let inst = tri_instance(&[(3.0, 0.2), (2.0, 0.4), (1.5, 0.3)]);
        let prices: Vec<f64> = inst
            .tri_agents()
            .unwrap()
            .iter()
            .map(|t| t.vbar())
            .collect();
        let seq = seq_posted_rev(&inst, &prices).unwrap();
        let mye = myerson_rev_tri(&inst).unwrap();
        assert!((seq - mye).abs() < 1e-15);
    }

    #[test]
    fn seq_posted_single_agent_and_errors() {
        let inst = tri_instance(&[(2.0, 0.5)]);
        assert!((seq_posted_rev(&inst, &[2.0]).unwrap() - 1.0).abs() < 1e-15);
        assert!(seq_posted_rev(&inst, &[2.0, 1.0]).is_err());
        let two = tri_instance(&[(2.0, 0.5), (1.0, 0.5)]);
        assert!(seq_posted_rev(&two, &[1.0, 2.0]).is_err());
    }

    #[test]
    fn reserve_single_agent_closed_form() {
        let inst = tri_instance(&[(2.0, 0.5)]);
        let est = reserve_rev_mc(&inst, 2.0, &McConfig::default()).unwrap();
        assert_eq!(est.mean, 1.0);
        assert_eq!(est.stderr, 0.0);
        // reserve above the support sells nothing
        let est = reserve_rev_mc(&inst, 5.0, &McConfig::default()).unwrap();
        assert_eq!(est.mean, 0.0);
        assert!(reserve_rev_mc(&inst, 0.0, &McConfig::default()).is_err());
    }

    #[test]
    fn reserve_two_atoms() {
        // both atoms at 2 with mass 1/2: a sale happens unless both miss,
        // and the payment is always 2
        let inst = tri_instance(&[(2.0, 0.5), (2.0, 0.5)]);
        let mc = McConfig {
            samples: 200_000,
            seed: 7,
            chunks: 32,
        };
        let est = reserve_rev_mc(&inst, 2.0, &mc).unwrap();
        assert!(
            (est.mean - 1.5).abs() < 3.0 * est.stderr + 1e-9,
            "got {est:?}"
        );
    }

    #[test]
    fn reserve_mc_is_deterministic() {
        let inst = tri_instance(&[(2.0, 0.5), (1.5, 0.3), (1.2, 0.2)]);
        let mc = McConfig {
            samples: 10_000,
            seed: 11,
            chunks: 8,
        };
        let a = mc_reserve_estimates(&inst, &[0.8, 1.3, 2.0], &mc, true).unwrap();
        let b = mc_reserve_estimates(&inst, &[0.8, 1.3, 2.0], &mc, true).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.mean.to_bits(), y.mean.to_bits());
            assert_eq!(x.stderr.to_bits(), y.stderr.to_bits());
        }
    }

    #[test]
    fn plain_and_conditional_engines_agree() {
        let inst = tri_instance(&[(2.0, 0.4), (1.5, 0.4)]);
        let mc = McConfig {
            samples: 400_000,
            seed: 3,
            chunks: 64,
        };
        let cond = mc_reserve_estimates(&inst, &[1.0, 1.5, 2.0], &mc, true).unwrap();
        let plain = mc_reserve_estimates(&inst, &[1.0, 1.5, 2.0], &mc, false).unwrap();
        for (c, p) in cond.iter().zip(&plain) {
            let spread = 3.0 * (c.stderr + p.stderr) + 1e-9;
            assert!((c.mean - p.mean).abs() < spread, "{c:?} vs {p:?}");
        }
    }

    #[test]
    fn opt_reserve_single_agent() {
        let inst = tri_instance(&[(2.0, 0.5)]);
        let (r, est) = opt_reserve_rev_mc(&inst, None, &McConfig::default()).unwrap();
        assert_eq!(r, 2.0);
        assert_eq!(est.mean, 1.0);
    }

    #[test]
    fn ratio_report_degenerate_instance() {
        let inst = tri_instance(&[(2.0, 0.5)]);
        let report = ratio_report(&inst, &McConfig::default()).unwrap();
        assert!((report.ex_ante - 1.0).abs() < 1e-12);
        assert_eq!(report.opt_auction, Some(1.0));
        assert!((report.opt_reserve - 1.0).abs() < 1e-12);
        assert!((report.opt_price - 1.0).abs() < 1e-12);
        assert!((report.ratio_exante_price - 1.0).abs() < 1e-12);
        assert!((report.ratio_opt_price.unwrap() - 1.0).abs() < 1e-12);
        assert!((report.ratio_opt_reserve.unwrap() - 1.0).abs() < 1e-12);
        assert!(report.ordering_ok());
        // CSV row stays aligned with the header
        assert_eq!(
            report.csv_row().split(',').count(),
            RatioReport::csv_header().split(',').count()
        );
    }

    #[test]
    fn ratio_report_flags_missing_auction_for_general_instances() {
        let inst = Instance::new(vec![
            Agent::Uniform { lo: 0.0, hi: 2.0 },
            Agent::Exponential { rate: 1.0 },
        ])
        .unwrap();
        let mc = McConfig {
            samples: 100_000,
            seed: 9,
            chunks: 32,
        };
        let report = ratio_report(&inst, &mc).unwrap();
        assert_eq!(report.opt_auction, None);
        assert_eq!(report.ratio_opt_price, None);
        assert_eq!(report.ratio_opt_reserve, None);
        assert!(report.ex_ante >= report.opt_price);
        assert!(report.ordering_ok(), "{report:?}");
        // the auction columns stay empty in the CSV row
        let row = report.csv_row();
        let cols: Vec<&str> = row.split(',').collect();
        assert_eq!(cols[2], "");
        assert_eq!(cols[7], "");
        assert_eq!(cols[8], "");
    }
}
