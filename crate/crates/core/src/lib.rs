//! Revenue benchmarks for selling one item to independent, non-identically
//! distributed bidders.
//!
//! The crate computes and compares four quantities for a given instance of
//! value distributions:
//!
//! - the ex ante relaxation (sell at most one item in expectation),
//! - the optimal auction (exact for triangular revenue-curve instances),
//! - the second-price auction with an anonymous reserve (Monte Carlo),
//! - anonymous posted pricing.
//!
//! It also constructs the worst-case instances on which anonymous pricing is
//! weakest relative to the ex ante relaxation: the ratio approaches
//! `1 + V(Q^-1(1)) ≈ 2.7184` (e to three decimals) as the number of agents
//! grows, and the generator in [`worstcase`] reproduces that convergence
//! table. The [`irregular`] module houses the value-or-nothing family on
//! which no anonymous mechanism beats an n-approximation.

pub mod curves;
pub mod error;
pub mod irregular;
pub mod quad;
pub mod revenue;
pub mod verify;
pub mod worstcase;

pub use curves::{regularity_check, triangularize, Agent, Instance, RevenueCurve, TriAgent};
pub use error::{Error, Result};
pub use irregular::{
    irregular_report, irregular_reserve_bound, irregular_seq_posted, make_irregular,
    uniform_price_lb, IrregularInstance,
};
pub use revenue::{
    ex_ante_rev, mc_reserve_estimates, myerson_rev_tri, opt_price_rev, opt_reserve_rev_mc,
    price_rev, ratio_report, reserve_rev_mc, seq_posted_rev, McConfig, McEstimate, PriceSearch,
    RatioReport,
};
pub use verify::{run_suites, SuiteReport};
pub use worstcase::{
    calc_q, calc_q_inverse, calc_v, calc_v_prime, canonical_qbar, check_twist, continuum_objective,
    feasibility_check, generate_worstcase, ContinuumObjective, FeasibilityReport, GeneratorConfig,
    VqCalculus,
};
