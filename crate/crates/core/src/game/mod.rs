//! Stackelberg quantity duopoly in which the leader licenses its patent to
//! the follower for a non-linear royalty (r² per unit of follower output).
//!
//! Stage order: the leader sets r, then q1, then the follower picks q2.
//! Closed forms are implemented as derived; feasibility (real royalty,
//! non-negative quantities and price) is reported through flags, never by
//! clamping.

mod oracle;

pub use oracle::{
    central_difference, feasibility_region, golden_section_max, grid_argmax, verify_equilibrium,
    write_feasibility_csv, FeasibilityPoint, FocCheck, VerificationReport, VerifyOptions,
};

use serde::Serialize;

use crate::error::{Error, Result};

/// Slack used when classifying closed-form zeros as non-negative.
const SIGN_TOL: f64 = 1e-12;

/// Linear inverse demand p = a - Q with constant marginal cost c.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MarketParams {
    pub a: f64,
    pub c: f64,
}

impl MarketParams {
    pub fn new(a: f64, c: f64) -> Result<Self> {
        if !a.is_finite() || !c.is_finite() {
            return Err(Error::NonFinite(format!("a = {a}, c = {c}")));
        }
        if a <= 0.0 || c <= 0.0 {
            return Err(Error::InvalidSpec(format!(
                "market parameters must be positive, got a = {a}, c = {c}"
            )));
        }
        Ok(Self { a, c })
    }

    fn scale(&self) -> f64 {
        1.0 + self.a.abs() + self.c.abs()
    }
}

pub fn inverse_demand(q1: f64, q2: f64, params: &MarketParams) -> f64 {
    params.a - (q1 + q2)
}

/// Follower profit as a function of the squared royalty.
pub(crate) fn follower_profit_sq(r_sq: f64, q1: f64, q2: f64, params: &MarketParams) -> f64 {
    (params.a - q1 - q2) * q2 - r_sq * q2 - params.c * q2
}

/// π2 = (a - q1 - q2) q2 - r² q2 - c q2.
pub fn follower_profit(r: f64, q1: f64, q2: f64, params: &MarketParams) -> f64 {
    follower_profit_sq(r * r, q1, q2, params)
}

pub(crate) fn follower_best_response_sq(q1: f64, r_sq: f64, params: &MarketParams) -> f64 {
    (params.a - q1 - r_sq - params.c) / 2.0
}

/// Follower reaction q2 = (a - q1 - r² - c) / 2. May be negative.
pub fn follower_best_response(q1: f64, r: f64, params: &MarketParams) -> f64 {
    follower_best_response_sq(q1, r * r, params)
}

pub(crate) fn leader_profit_sq(r_sq: f64, q1: f64, params: &MarketParams) -> f64 {
    let MarketParams { a, c } = *params;
    a * q1 - q1 * q1 - q1 * a / 2.0 + q1 * q1 / 2.0 + r_sq * q1 / 2.0 + c * q1 / 2.0 + r_sq * q1
        - c * q1
}

/// Leader profit with the follower's reaction substituted in, expanded term
/// by term: a q1 - q1² - q1 a/2 + q1²/2 + r² q1/2 + c q1/2 + r² q1 - c q1.
pub fn leader_profit(r: f64, q1: f64, params: &MarketParams) -> f64 {
    leader_profit_sq(r * r, q1, params)
}

pub(crate) fn leader_optimal_quantity_sq(r_sq: f64, params: &MarketParams) -> f64 {
    (params.a + 3.0 * r_sq - params.c) / 2.0
}

/// q1* = (a + 3r² - c) / 2, the unique maximiser of [`leader_profit`] in q1
/// (the objective has constant curvature -1).
pub fn leader_optimal_quantity(r: f64, params: &MarketParams) -> f64 {
    leader_optimal_quantity_sq(r * r, params)
}

pub(crate) fn follower_equilibrium_quantity_sq(r_sq: f64, params: &MarketParams) -> f64 {
    (params.a - 5.0 * r_sq - params.c) / 4.0
}

/// q2* = (a - 5r² - c) / 4, the follower's reaction to q1*.
pub fn follower_equilibrium_quantity(r: f64, params: &MarketParams) -> f64 {
    follower_equilibrium_quantity_sq(r * r, params)
}

/// ∂π2/∂q2 = a - q1 - 2 q2 - r² - c.
pub fn follower_foc(r: f64, q1: f64, q2: f64, params: &MarketParams) -> f64 {
    params.a - q1 - 2.0 * q2 - r * r - params.c
}

/// ∂π1/∂q1 of [`leader_profit`], unsimplified.
pub fn leader_foc(r: f64, q1: f64, params: &MarketParams) -> f64 {
    let MarketParams { a, c } = *params;
    let r2 = r * r;
    a - 2.0 * q1 - a / 2.0 + q1 + r2 / 2.0 + c / 2.0 + r2 - c
}

/// ∂π1/∂r at fixed q1: r q1 + 2 r q1 = 3 r q1.
pub fn royalty_foc(r: f64, q1: f64) -> f64 {
    r * q1 + 2.0 * r * q1
}

/// Root of the royalty condition, r* = sqrt((c - a) / 3).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OptimalRoyalty {
    Real {
        r: f64,
    },
    /// c < a: the radicand (c - a) / 3 is negative.
    NonReal {
        radicand: f64,
    },
}

impl OptimalRoyalty {
    pub fn radicand(&self) -> f64 {
        match *self {
            Self::Real { r } => r * r,
            Self::NonReal { radicand } => radicand,
        }
    }

    pub fn real(&self) -> Option<f64> {
        match *self {
            Self::Real { r } => Some(r),
            Self::NonReal { .. } => None,
        }
    }
}

pub fn optimal_royalty(params: &MarketParams) -> OptimalRoyalty {
    let radicand = (params.c - params.a) / 3.0;
    if radicand >= 0.0 {
        OptimalRoyalty::Real { r: radicand.sqrt() }
    } else {
        OptimalRoyalty::NonReal { radicand }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Feasibility {
    pub r_real: bool,
    pub q1_nonneg: bool,
    pub q2_nonneg: bool,
    pub price_nonneg: bool,
}

impl Feasibility {
    pub fn all(&self) -> bool {
        self.r_real && self.q1_nonneg && self.q2_nonneg && self.price_nonneg
    }
}

/// A game state: royalty, both quantities, price and profits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Equilibrium {
    pub params: MarketParams,
    /// `None` when the royalty is not real.
    pub r: Option<f64>,
    /// Squared royalty; negative when `r` is not real. Quantities and
    /// profits are evaluated at this value, so the formal substitution is
    /// always visible.
    pub r_squared: f64,
    pub q1: f64,
    pub q2: f64,
    pub price: f64,
    pub leader_profit: f64,
    pub follower_profit: f64,
    pub flags: Feasibility,
}

impl Equilibrium {
    fn assemble(params: MarketParams, r: Option<f64>, r_squared: f64, q1: f64, q2: f64) -> Self {
        let price = inverse_demand(q1, q2, &params);
        let tol = SIGN_TOL * params.scale();
        Self {
            params,
            r,
            r_squared,
            q1,
            q2,
            price,
            leader_profit: price * q1 + r_squared * q1 - params.c * q1,
            follower_profit: follower_profit_sq(r_squared, q1, q2, &params),
            flags: Feasibility {
                r_real: r.is_some(),
                q1_nonneg: q1 >= -tol,
                q2_nonneg: q2 >= -tol,
                price_nonneg: price >= -tol,
            },
        }
    }

    /// Quantity-stage equilibrium for a given royalty.
    pub fn at_royalty(params: &MarketParams, r: f64) -> Self {
        let r_sq = r * r;
        let q1 = leader_optimal_quantity_sq(r_sq, params);
        let q2 = follower_equilibrium_quantity_sq(r_sq, params);
        Self::assemble(*params, Some(r), r_sq, q1, q2)
    }

    /// Arbitrary state, e.g. to evaluate off-equilibrium quantities.
    pub fn at_state(params: &MarketParams, r: f64, q1: f64, q2: f64) -> Self {
        Self::assemble(*params, Some(r), r * r, q1, q2)
    }
}

/// Subgame-perfect profile: r* from the royalty condition, then q1*(r*) and
/// q2*(r*). Substitution gives q1* = 0 and q2* = 2(a - c)/3 identically.
pub fn spne(params: &MarketParams) -> Equilibrium {
    let royalty = optimal_royalty(params);
    let r_sq = royalty.radicand();
    let q1 = leader_optimal_quantity_sq(r_sq, params);
    let q2 = follower_equilibrium_quantity_sq(r_sq, params);
    Equilibrium::assemble(*params, royalty.real(), r_sq, q1, q2)
}
