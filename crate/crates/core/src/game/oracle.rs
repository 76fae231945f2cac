//! Numeric cross-checks for the closed forms: central finite differences,
//! grid search and golden-section search. Nothing here calls the closed-form
//! reaction functions except to compare against them.

use std::io::Write;

use serde::Serialize;

use super::{
    follower_best_response, follower_foc, follower_profit, leader_foc, leader_optimal_quantity,
    leader_profit, royalty_foc, spne, Equilibrium, MarketParams,
};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub struct VerifyOptions {
    /// Grid spacing as a fraction of the search interval.
    pub grid_resolution: f64,
    pub fd_step: f64,
    pub golden_tol: f64,
    /// Tolerance for derivative agreement and stationarity.
    pub tolerance: f64,
    /// Number of royalty values sampled for the profile check.
    pub profile_points: usize,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self {
            grid_resolution: 1e-4,
            fd_step: 1e-5,
            golden_tol: 1e-8,
            tolerance: 1e-6,
            profile_points: 41,
        }
    }
}

pub fn central_difference<F: Fn(f64) -> f64>(f: F, x: f64, h: f64) -> f64 {
    (f(x + h) - f(x - h)) / (2.0 * h)
}

/// Argmax of `f` over an evenly spaced grid on `[lo, hi]` with spacing
/// `resolution * (hi - lo)`. Returns `(argmax, step)`.
pub fn grid_argmax<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, resolution: f64) -> (f64, f64) {
    let steps = (1.0 / resolution).round().max(1.0) as usize;
    let step = (hi - lo) / steps as f64;
    let mut best = (lo, f(lo));
    for i in 1..=steps {
        let x = lo + step * i as f64;
        let v = f(x);
        if v > best.1 {
            best = (x, v);
        }
    }
    (best.0, step)
}

/// Golden-section search for the maximum of a unimodal `f` on `[lo, hi]`.
pub fn golden_section_max<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while hi - lo > tol {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = f(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = f(x1);
        }
    }
    (lo + hi) / 2.0
}

#[derive(Debug, Clone, Serialize)]
pub struct FocCheck {
    pub name: &'static str,
    /// Finite-difference or search estimate.
    pub numeric: f64,
    /// Closed-form value it is compared against.
    pub closed_form: f64,
    pub abs_error: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl FocCheck {
    fn new(name: &'static str, numeric: f64, closed_form: f64, tolerance: f64) -> Self {
        let abs_error = (numeric - closed_form).abs();
        Self {
            name,
            numeric,
            closed_form,
            abs_error,
            tolerance,
            passed: abs_error <= tolerance,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct VerificationReport {
    pub params: MarketParams,
    pub r: f64,
    pub q1: f64,
    pub q2: f64,
    pub checks: Vec<FocCheck>,
    /// Both quantity-stage derivatives vanish at the state (within tolerance).
    pub quantity_stage_stationary: bool,
    /// Royalty derivative vanishes at the state.
    pub royalty_stationary: bool,
    /// (r, leader profit with q1 re-optimised numerically) along a royalty grid.
    pub royalty_profile: Vec<(f64, f64)>,
    pub royalty_profile_increasing: bool,
}

impl VerificationReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn check(&self, name: &str) -> Option<&FocCheck> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn to_text(&self) -> String {
        let mut out = format!(
            "state: a = {}, c = {}, r = {}, q1 = {}, q2 = {}\n",
            self.params.a, self.params.c, self.r, self.q1, self.q2
        );
        for c in &self.checks {
            out.push_str(&format!(
                "{:<24} numeric {:>14.8}  closed {:>14.8}  |err| {:.2e}  {}\n",
                c.name,
                c.numeric,
                c.closed_form,
                c.abs_error,
                if c.passed { "pass" } else { "FAIL" }
            ));
        }
        out.push_str(&format!(
            "quantity stage stationary: {}\nroyalty stationary: {}\nleader profit increasing in r along profile: {}\n",
            self.quantity_stage_stationary, self.royalty_stationary, self.royalty_profile_increasing
        ));
        out
    }
}

/// Checks the first-order conditions and both quantity-stage optimisations at
/// the state `(r, q1, q2)` numerically.
pub fn verify_equilibrium(
    params: &MarketParams,
    state: &Equilibrium,
    options: &VerifyOptions,
) -> Result<VerificationReport> {
    let r = state
        .r
        .ok_or_else(|| Error::NonFinite("royalty is not real; nothing to verify".into()))?;
    let (q1, q2) = (state.q1, state.q2);
    for (name, v) in [("r", r), ("q1", q1), ("q2", q2)] {
        if !v.is_finite() {
            return Err(Error::NonFinite(format!("{name} = {v}")));
        }
    }
    let h = options.fd_step;
    let tol = options.tolerance;
    let mut checks = Vec::new();

    let d_follower = central_difference(|x| follower_profit(r, q1, x, params), q2, h);
    checks.push(FocCheck::new(
        "follower_foc",
        d_follower,
        follower_foc(r, q1, q2, params),
        tol,
    ));
    let d_leader = central_difference(|x| leader_profit(r, x, params), q1, h);
    checks.push(FocCheck::new(
        "leader_foc",
        d_leader,
        leader_foc(r, q1, params),
        tol,
    ));
    let d_royalty = central_difference(|x| leader_profit(x, q1, params), r, h);
    checks.push(FocCheck::new(
        "royalty_foc",
        d_royalty,
        royalty_foc(r, q1),
        tol,
    ));

    let second = (leader_profit(r, q1 + h, params) - 2.0 * leader_profit(r, q1, params)
        + leader_profit(r, q1 - h, params))
        / (h * h);
    // second differences lose about half the digits
    checks.push(FocCheck::new("leader_curvature", second, -1.0, 1e-3));

    let q2_hi = params.a;
    let (g2, step2) = grid_argmax(
        |x| follower_profit(r, q1, x, params),
        0.0,
        q2_hi,
        options.grid_resolution,
    );
    let br = follower_best_response(q1, r, params);
    checks.push(FocCheck::new("follower_grid_argmax", g2, br, step2));
    let q1_hi = 2.0 * params.a + 3.0 * r * r;
    let (g1, step1) = grid_argmax(
        |x| leader_profit(r, x, params),
        0.0,
        q1_hi,
        options.grid_resolution,
    );
    let q1_star = leader_optimal_quantity(r, params);
    checks.push(FocCheck::new("leader_grid_argmax", g1, q1_star, step1));
    let gs1 = golden_section_max(
        |x| leader_profit(r, x, params),
        0.0,
        q1_hi,
        options.golden_tol,
    );
    checks.push(FocCheck::new("leader_golden_section", gs1, q1_star, tol));
    let gs2 = golden_section_max(
        |x| follower_profit(r, gs1, x, params),
        0.0,
        q2_hi,
        options.golden_tol,
    );
    checks.push(FocCheck::new(
        "follower_golden_section",
        gs2,
        follower_best_response(gs1, r, params),
        tol,
    ));

    // leader profit along r with q1 re-optimised by search at each point
    let r_hi = 2.0 * r.max(1.0);
    let n = options.profile_points.max(2);
    let royalty_profile: Vec<(f64, f64)> = (0..n)
        .map(|i| {
            let rr = r_hi * i as f64 / (n - 1) as f64;
            let hi = 2.0 * params.a + 3.0 * rr * rr;
            let q = golden_section_max(
                |x| leader_profit(rr, x, params),
                0.0,
                hi,
                options.golden_tol,
            );
            (rr, leader_profit(rr, q, params))
        })
        .collect();
    let royalty_profile_increasing = royalty_profile.windows(2).all(|w| w[1].1 > w[0].1);

    Ok(VerificationReport {
        params: *params,
        r,
        q1,
        q2,
        quantity_stage_stationary: d_follower.abs() <= tol && d_leader.abs() <= tol,
        royalty_stationary: d_royalty.abs() <= tol,
        checks,
        royalty_profile,
        royalty_profile_increasing,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FeasibilityPoint {
    pub a: f64,
    pub c: f64,
    pub r_real: bool,
    pub q1_nonneg: bool,
    pub q2_nonneg: bool,
    pub p_nonneg: bool,
}

/// Feasibility flags of the subgame-perfect profile at every (a, c) pair.
/// Pairs with non-positive or non-finite entries are skipped.
pub fn feasibility_region(a_values: &[f64], c_values: &[f64]) -> Vec<FeasibilityPoint> {
    let mut out = Vec::with_capacity(a_values.len() * c_values.len());
    for &a in a_values {
        for &c in c_values {
            let Ok(params) = MarketParams::new(a, c) else {
                continue;
            };
            let eq = spne(&params);
            out.push(FeasibilityPoint {
                a,
                c,
                r_real: eq.flags.r_real,
                q1_nonneg: eq.flags.q1_nonneg,
                q2_nonneg: eq.flags.q2_nonneg,
                p_nonneg: eq.flags.price_nonneg,
            });
        }
    }
    out
}

pub fn write_feasibility_csv<W: Write>(points: &[FeasibilityPoint], sink: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(["a", "c", "r_real", "q1_nonneg", "q2_nonneg", "p_nonneg"])?;
    for p in points {
        w.write_record([
            p.a.to_string(),
            p.c.to_string(),
            p.r_real.to_string(),
            p.q1_nonneg.to_string(),
            p.q2_nonneg.to_string(),
            p.p_nonneg.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
