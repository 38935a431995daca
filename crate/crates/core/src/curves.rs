//! Value distributions, revenue curves, regularity checks, sampling, and the
//! reduction from regular instances to triangular instances.
//!
//! A distribution is described in quantile space by its revenue curve
//! `R(q) = q * F^{-1}(1 - q)`: the expected revenue from serving the agent
//! with probability exactly `q`. Regular distributions are the ones whose
//! revenue curve is concave. The triangular family `Tri(vbar, qbar)` is the
//! extreme case: an atom of mass `qbar` at `vbar` over a continuous tail
//! chosen so the curve is exactly the triangle `(0,0) - (qbar, vbar*qbar) -
//! (1,0)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Absolute tolerance for midpoint concavity tests.
pub const CONCAVITY_TOL: f64 = 1e-9;

/// Default grid size for sampled revenue curves.
pub const DEFAULT_CURVE_GRID: usize = 10_001;

/// Triangular revenue-curve distribution `Tri(vbar, qbar)`: a point mass of
/// probability `qbar` at value `vbar`, with the continuous part below chosen
/// so that posting any price `p <= vbar` sells with probability
/// `vbar*qbar / (p*(1-qbar) + vbar*qbar)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TriAgent {
    vbar: f64,
    qbar: f64,
}

impl TriAgent {
    /// Requires `vbar > 0` and `qbar` in `(0, 1]`. `qbar = 1` is the
    /// deterministic value with no continuous part.
    pub fn new(vbar: f64, qbar: f64) -> Result<Self> {
        if vbar <= 0.0 || !vbar.is_finite() {
            return Err(Error::Domain(format!(
                "tri agent needs vbar > 0, got {vbar}"
            )));
        }
        if !(qbar > 0.0 && qbar <= 1.0) {
            return Err(Error::Domain(format!(
                "tri agent needs qbar in (0,1], got {qbar}"
            )));
        }
        Ok(Self { vbar, qbar })
    }

    pub fn vbar(&self) -> f64 {
        self.vbar
    }

    pub fn qbar(&self) -> f64 {
        self.qbar
    }

    /// CDF at price `p` (right-continuous: the atom is included at `p = vbar`).
    pub fn cdf(&self, p: f64) -> Result<f64> {
        if p < 0.0 || p.is_nan() {
            return Err(Error::Domain(format!("cdf needs p >= 0, got {p}")));
        }
        if p >= self.vbar {
            return Ok(1.0);
        }
        Ok(self.cdf_left(p))
    }

    /// Left limit of the CDF, i.e. `Pr[v < p]`. This is the quantity that
    /// enters pricing revenue: an agent at the atom accepts price `vbar`.
    pub(crate) fn cdf_left(&self, p: f64) -> f64 {
        if p <= 0.0 {
            return 0.0;
        }
        if p > self.vbar {
            return 1.0;
        }
        let num = p * (1.0 - self.qbar);
        num / (num + self.vbar * self.qbar)
    }

    /// Revenue curve: `vbar*q` up to the apex at `qbar`, then the straight
    /// edge down to `(1, 0)`.
    pub fn revenue(&self, q: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&q) {
            return Err(Error::Domain(format!(
                "revenue curve needs q in [0,1], got {q}"
            )));
        }
        if q <= self.qbar {
            Ok(self.vbar * q)
        } else {
            Ok(self.vbar * self.qbar * (1.0 - q) / (1.0 - self.qbar))
        }
    }

    /// Inverse-CDF sampler. `u >= 1 - qbar` maps to the atom; below that the
    /// continuous part is inverted in closed form.
    pub fn sample(&self, u: f64) -> Result<f64> {
        if !(0.0..1.0).contains(&u) {
            return Err(Error::Domain(format!("sample needs u in [0,1), got {u}")));
        }
        if u >= 1.0 - self.qbar {
            return Ok(self.vbar);
        }
        Ok(u * self.vbar * self.qbar / ((1.0 - self.qbar) * (1.0 - u)))
    }
}

/// One agent of an instance: triangular or one of the named closed-form
/// families. `TwoPoint` is the irregular value-or-nothing distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Agent {
    Tri(TriAgent),
    Uniform {
        lo: f64,
        hi: f64,
    },
    Exponential {
        rate: f64,
    },
    #[serde(rename = "twopoint")]
    TwoPoint {
        value: f64,
        prob: f64,
    },
}

impl Agent {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Agent::Tri(t) => {
                TriAgent::new(t.vbar, t.qbar)?;
            }
            Agent::Uniform { lo, hi } => {
                if !(lo >= 0.0 && hi > lo && hi.is_finite()) {
                    return Err(Error::Domain(format!(
                        "uniform agent needs 0 <= lo < hi, got [{lo}, {hi}]"
                    )));
                }
            }
            Agent::Exponential { rate } => {
                if !(rate > 0.0 && rate.is_finite()) {
                    return Err(Error::Domain(format!(
                        "exponential agent needs rate > 0, got {rate}"
                    )));
                }
            }
            Agent::TwoPoint { value, prob } => {
                if !(value > 0.0 && value.is_finite()) {
                    return Err(Error::Domain(format!(
                        "twopoint agent needs value > 0, got {value}"
                    )));
                }
                if !(prob > 0.0 && prob <= 1.0) {
                    return Err(Error::Domain(format!(
                        "twopoint agent needs prob in (0,1], got {prob}"
                    )));
                }
            }
        }
        Ok(())
    }

    /// `Pr[v >= p]`: the probability that this agent accepts price `p`.
    /// Atoms count at their own value (left limit of the CDF).
    pub fn sale_prob(&self, p: f64) -> f64 {
        if p <= 0.0 {
            return 1.0;
        }
        match *self {
            Agent::Tri(t) => 1.0 - t.cdf_left(p),
            Agent::Uniform { lo, hi } => {
                if p <= lo {
                    1.0
                } else if p >= hi {
                    0.0
                } else {
                    (hi - p) / (hi - lo)
                }
            }
            Agent::Exponential { rate } => (-rate * p).exp(),
            Agent::TwoPoint { value, prob } => {
                if p <= value {
                    prob
                } else {
                    0.0
                }
            }
        }
    }

    /// Right-continuous CDF, `Pr[v <= p]`.
    pub fn cdf(&self, p: f64) -> f64 {
        match *self {
            Agent::Tri(t) => {
                if p < 0.0 {
                    0.0
                } else if p >= t.vbar {
                    1.0
                } else {
                    t.cdf_left(p)
                }
            }
            Agent::Uniform { lo, hi } => ((p - lo) / (hi - lo)).clamp(0.0, 1.0),
            Agent::Exponential { rate } => {
                if p <= 0.0 {
                    0.0
                } else {
                    -(-rate * p).exp_m1()
                }
            }
            Agent::TwoPoint { value, prob } => {
                if p < 0.0 {
                    0.0
                } else if p >= value {
                    1.0
                } else {
                    1.0 - prob
                }
            }
        }
    }

    /// Inverse-CDF sample from a uniform draw `u` in `[0, 1)`.
    pub fn sample(&self, u: f64) -> f64 {
        match *self {
            Agent::Tri(t) => t.sample(u).expect("u in [0,1) by contract"),
            Agent::Uniform { lo, hi } => lo + u * (hi - lo),
            Agent::Exponential { rate } => -(-u).ln_1p() / rate,
            Agent::TwoPoint { value, prob } => {
                if u >= 1.0 - prob {
                    value
                } else {
                    0.0
                }
            }
        }
    }

    /// Top of the support (`inf` for exponential agents).
    pub fn support_max(&self) -> f64 {
        match *self {
            Agent::Tri(t) => t.vbar,
            Agent::Uniform { hi, .. } => hi,
            Agent::Exponential { .. } => f64::INFINITY,
            Agent::TwoPoint { value, .. } => value,
        }
    }

    /// `E[v * 1{a < v <= b}]`, used by the conditional reserve estimator.
    pub fn partial_mean(&self, a: f64, b: f64) -> f64 {
        if b <= a {
            return 0.0;
        }
        let a = a.max(0.0);
        match *self {
            Agent::Tri(t) => {
                let beta = 1.0 - t.qbar;
                let c = t.vbar * t.qbar;
                // continuous part lives on (0, vbar)
                let mut m = 0.0;
                if beta > 0.0 {
                    let lo = a.min(t.vbar);
                    let hi = b.min(t.vbar);
                    if hi > lo {
                        let anti = |v: f64| (c / beta) * ((beta * v + c).ln() + c / (beta * v + c));
                        m += anti(hi) - anti(lo);
                    }
                }
                if a < t.vbar && t.vbar <= b {
                    m += t.vbar * t.qbar;
                }
                m
            }
            Agent::Uniform { lo, hi } => {
                let l = a.clamp(lo, hi);
                let r = b.clamp(lo, hi);
                if r > l {
                    (r * r - l * l) / (2.0 * (hi - lo))
                } else {
                    0.0
                }
            }
            Agent::Exponential { rate } => {
                let anti = |v: f64| -(v + 1.0 / rate) * (-rate * v).exp();
                if b.is_finite() {
                    anti(b) - anti(a)
                } else {
                    -anti(a)
                }
            }
            Agent::TwoPoint { value, prob } => {
                if a < value && value <= b {
                    value * prob
                } else {
                    0.0
                }
            }
        }
    }

    /// Monopoly quantile: the `q` maximizing the revenue curve.
    pub fn monopoly_quantile(&self) -> f64 {
        match *self {
            Agent::Tri(t) => t.qbar,
            Agent::Uniform { lo, hi } => (hi / (2.0 * (hi - lo))).min(1.0),
            Agent::Exponential { .. } => (-1.0f64).exp(),
            Agent::TwoPoint { prob, .. } => prob,
        }
    }

    /// Price at which the sale probability is `q` (for `q` below an atom's
    /// mass the atom value itself is returned).
    pub fn price_at_quantile(&self, q: f64) -> f64 {
        match *self {
            Agent::Tri(t) => {
                if q <= t.qbar {
                    t.vbar
                } else {
                    // invert sale_prob(p) = vbar*qbar / (p*(1-qbar) + vbar*qbar)
                    t.vbar * t.qbar * (1.0 - q) / (q * (1.0 - t.qbar))
                }
            }
            Agent::Uniform { lo, hi } => hi - q * (hi - lo),
            Agent::Exponential { rate } => {
                if q == 0.0 {
                    f64::INFINITY
                } else {
                    -q.ln() / rate
                }
            }
            Agent::TwoPoint { value, prob } => {
                if q <= prob {
                    value
                } else {
                    0.0
                }
            }
        }
    }

    pub fn is_tri(&self) -> bool {
        matches!(self, Agent::Tri(_))
    }

    pub fn as_tri(&self) -> Option<TriAgent> {
        match *self {
            Agent::Tri(t) => Some(t),
            _ => None,
        }
    }

    /// Whether the revenue curve of this agent is concave. The named
    /// closed-form families are regular by construction; the two-point
    /// distribution is not (its curve drops discontinuously past the atom).
    pub fn is_regular(&self) -> bool {
        match self {
            Agent::Tri(_) | Agent::Uniform { .. } | Agent::Exponential { .. } => true,
            Agent::TwoPoint { prob, .. } => *prob >= 1.0,
        }
    }

    /// Closed-form revenue curve of this agent.
    pub fn revenue_curve(&self) -> RevenueCurve {
        RevenueCurve {
            repr: CurveRepr::Closed(*self),
        }
    }
}

/// Metadata block attached to generated worst-case instances.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorMetadata {
    pub n: usize,
    pub top_mass: f64,
    pub tolerance: f64,
    pub generator_version: u32,
}

/// An ordered collection of agents; the unit of every revenue computation.
///
/// Serializes as `{"agents":[{"type":"tri","vbar":2.0,"qbar":0.5}, ...]}`,
/// with an optional `metadata` block on generated instances.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Instance {
    agents: Vec<Agent>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub metadata: Option<GeneratorMetadata>,
}

impl Instance {
    pub fn new(agents: Vec<Agent>) -> Result<Self> {
        if agents.is_empty() {
            return Err(Error::Config("instance needs at least one agent".into()));
        }
        for a in &agents {
            a.validate()?;
        }
        Ok(Self {
            agents,
            metadata: None,
        })
    }

    pub fn with_metadata(mut self, metadata: GeneratorMetadata) -> Self {
        self.metadata = Some(metadata);
        self
    }

    pub fn from_tri_agents(agents: Vec<TriAgent>) -> Result<Self> {
        Self::new(agents.into_iter().map(Agent::Tri).collect())
    }

    pub fn agents(&self) -> &[Agent] {
        &self.agents
    }

    pub fn len(&self) -> usize {
        self.agents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.agents.is_empty()
    }

    pub fn is_all_tri(&self) -> bool {
        self.agents.iter().all(Agent::is_tri)
    }

    /// Triangular agents of an all-triangular instance.
    pub fn tri_agents(&self) -> Result<Vec<TriAgent>> {
        self.agents
            .iter()
            .map(|a| {
                a.as_tri().ok_or_else(|| {
                    Error::TypeMismatch("instance has a non-triangular agent".into())
                })
            })
            .collect()
    }

    /// Sum of atom masses of an all-triangular instance.
    pub fn tri_mass(&self) -> Result<f64> {
        Ok(self.tri_agents()?.iter().map(|t| t.qbar()).sum())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let inst: Instance = serde_json::from_str(text)
            .map_err(|e| Error::Config(format!("instance parse: {e}")))?;
        if inst.agents.is_empty() {
            return Err(Error::Config("instance needs at least one agent".into()));
        }
        for a in &inst.agents {
            a.validate()?;
        }
        Ok(inst)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("instance serialization cannot fail")
    }
}

/// A revenue curve, either closed-form (one of the agent families) or a dense
/// sampled grid over `[0, 1]`.
#[derive(Debug, Clone)]
pub struct RevenueCurve {
    repr: CurveRepr,
}

#[derive(Debug, Clone)]
enum CurveRepr {
    Closed(Agent),
    Sampled(Vec<f64>),
}

impl RevenueCurve {
    pub fn from_agent(agent: &Agent) -> Self {
        agent.revenue_curve()
    }

    /// Dense grid of `R(q)` values at `q = i / (len - 1)`.
    pub fn from_samples(values: Vec<f64>) -> Result<Self> {
        if values.len() < 3 {
            return Err(Error::Config(
                "sampled curve needs at least 3 points".into(),
            ));
        }
        Ok(Self {
            repr: CurveRepr::Sampled(values),
        })
    }

    /// Sample an agent's closed-form curve onto a grid.
    pub fn sampled_from_agent(agent: &Agent, grid: usize) -> Result<Self> {
        let grid = grid.max(3);
        let curve = agent.revenue_curve();
        let values = (0..grid)
            .map(|i| curve.eval(i as f64 / (grid - 1) as f64))
            .collect::<Result<Vec<_>>>()?;
        Self::from_samples(values)
    }

    pub fn eval(&self, q: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&q) {
            return Err(Error::Domain(format!(
                "revenue curve needs q in [0,1], got {q}"
            )));
        }
        match &self.repr {
            CurveRepr::Closed(agent) => Ok(eval_closed(agent, q)),
            CurveRepr::Sampled(vals) => {
                let x = q * (vals.len() - 1) as f64;
                let i = (x.floor() as usize).min(vals.len() - 2);
                let t = x - i as f64;
                Ok(vals[i] * (1.0 - t) + vals[i + 1] * t)
            }
        }
    }
}

fn eval_closed(agent: &Agent, q: f64) -> f64 {
    match *agent {
        Agent::Tri(t) => t.revenue(q).expect("q validated"),
        Agent::Uniform { lo, hi } => q * (hi - q * (hi - lo)),
        Agent::Exponential { rate } => {
            if q == 0.0 {
                0.0
            } else {
                -q * q.ln() / rate
            }
        }
        Agent::TwoPoint { value, prob } => {
            if q <= prob {
                q * value
            } else {
                0.0
            }
        }
    }
}

/// Midpoint concavity on a uniform grid: `2 R(q) >= R(q-h) + R(q+h)` within
/// [`CONCAVITY_TOL`] at every interior grid point.
pub fn regularity_check(curve: &RevenueCurve, grid_size: usize) -> Result<bool> {
    if grid_size < 3 {
        return Err(Error::Config(format!(
            "regularity check needs grid_size >= 3, got {grid_size}"
        )));
    }
    let h = 1.0 / (grid_size - 1) as f64;
    for i in 1..grid_size - 1 {
        let q = i as f64 * h;
        let mid = 2.0 * curve.eval(q)?;
        let ends = curve.eval(q - h)? + curve.eval((q + h).min(1.0))?;
        if mid < ends - CONCAVITY_TOL {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Replace each agent that receives ex ante mass `q_i > 0` by
/// `Tri(R_i(q_i)/q_i, q_i)`; zero-mass agents are dropped. The output has the
/// same ex ante revenue and pointwise weakly lower pricing revenue, which is
/// verified on a price grid at runtime.
pub fn triangularize(instance: &Instance, exante_quantiles: &[f64]) -> Result<Instance> {
    if exante_quantiles.len() != instance.len() {
        return Err(Error::Config(format!(
            "quantile vector length {} does not match agent count {}",
            exante_quantiles.len(),
            instance.len()
        )));
    }
    let mass: f64 = exante_quantiles.iter().sum();
    if exante_quantiles.iter().any(|&q| !(0.0..=1.0).contains(&q)) {
        return Err(Error::Domain("quantiles must lie in [0,1]".into()));
    }
    if mass > 1.0 + 1e-9 {
        return Err(Error::Domain(format!(
            "quantiles must sum to at most 1, got {mass}"
        )));
    }
    let mut agents = Vec::new();
    for (agent, &q) in instance.agents().iter().zip(exante_quantiles) {
        if q == 0.0 {
            continue;
        }
        let r = agent.revenue_curve().eval(q)?;
        agents.push(TriAgent::new(r / q, q)?);
    }
    if agents.is_empty() {
        return Err(Error::DegenerateAssignment);
    }
    let out = Instance::from_tri_agents(agents)?;

    // The reduction can only lower pricing revenue; spot-check on a grid.
    let p_max = instance
        .agents()
        .iter()
        .map(|a| {
            let m = a.support_max();
            if m.is_finite() {
                m
            } else {
                // exponential tail: beyond this price revenue is negligible
                30.0 / match a {
                    Agent::Exponential { rate } => *rate,
                    _ => 1.0,
                }
            }
        })
        .fold(0.0f64, f64::max);
    for i in 1..=64 {
        let p = p_max * i as f64 / 64.0;
        let out_rev = crate::revenue::price_rev(&out, p);
        let in_rev = crate::revenue::price_rev(instance, p);
        if out_rev > in_rev + 1e-7 * (1.0 + in_rev) {
            return Err(Error::Numeric(format!(
                "triangularized instance exceeds source pricing revenue at p={p}: {out_rev} > {in_rev}"
            )));
        }
    }
    Ok(out)
}
