//! The weighted algebra `S^t_q(G)` with norm `||(1+l)^t f||_q`: containment
//! in the operator algebras, submultiplicativity, power sequences, the
//! derivation `[l, .]` with its modulation flow, and idempotent promotion.

mod derivation;
mod idempotent;

pub use derivation::{
    derivation_apply, derivation_norm_bounds, flow_consistency_check, leibniz_error, DerivationKernel, FlowOptions,
};
pub use idempotent::{idempotent_promote, Promotion};

use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::{LabError, Result};
use crate::funcalg::{conjugate, GroupFunction};
use crate::opnorm::{lower_bound_truncated, star_bracket, TruncationSchedule};
use crate::rdlab::RdFit;
use crate::report::{sound_le, CheckReport, Row, Verdict};

/// Terms summed exactly in the containment constant before the integral tail.
pub const ZETA_TERMS: usize = 1_000_000;

/// Budget on `|supp f^n| * |supp f|` for power sequences.
pub const POWER_BUDGET: usize = 50_000_000;

pub fn sobolev_norm(f: &GroupFunction, t: f64, q: f64) -> f64 {
    f.weight_t(t).lq_norm(q)
}

/// `(sum_{n>=1} n^-p)^{1/p}` from above: exact partial sum plus
/// `N^{1-p}/(p-1)`.
pub fn zeta_root(p: f64) -> Result<f64> {
    if p.is_infinite() {
        return Ok(1.0);
    }
    if !(p > 1.0) {
        return Err(LabError::Usage(format!("sum of n^-p diverges for p = {p}")));
    }
    let n = ZETA_TERMS as f64;
    let partial: f64 = (1..=ZETA_TERMS).rev().map(|k| (k as f64).powf(-p)).sum();
    let tail = n.powf(1.0 - p) / (p - 1.0);
    Ok(((partial + tail) * (1.0 + 1e-12)).powf(1.0 / p))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SobolevParams {
    pub t: f64,
    pub q: f64,
    /// Fitted polynomial `C (1+n)^D` bounding `||f||_{B(l^q)} / ||f||_q` on `B_n`.
    pub c: f64,
    pub d: f64,
    pub k: f64,
}

impl SobolevParams {
    pub fn new(q: f64, c: f64, d: f64, t: Option<f64>) -> Result<Self> {
        if !(q >= 1.0 && q.is_finite()) {
            return Err(LabError::Usage(format!("sobolev parameters need 1 <= q < inf, got {q}")));
        }
        if !(c > 0.0 && d >= 0.0) {
            return Err(LabError::Usage(format!("invalid fit constants C = {c}, D = {d}")));
        }
        let t = t.unwrap_or(((d + 1.0) * 10.0).ceil() / 10.0);
        if t < 0.0 {
            return Err(LabError::Usage(format!("weight exponent {t} is negative")));
        }
        let k = c * zeta_root(conjugate(q))?;
        Ok(SobolevParams { t, q, c, d, k })
    }

    pub fn from_fit(fit: &RdFit, t: Option<f64>) -> Result<Self> {
        Self::new(fit.q, fit.c_hat, fit.d_hat, t)
    }

    pub fn is_algebra(&self) -> bool {
        self.t >= self.d + 1.0
    }
}

fn split_spheres(f: &GroupFunction) -> Result<Vec<GroupFunction>> {
    let g = f.group();
    let mut parts: Vec<Vec<_>> = vec![Vec::new(); f.support_radius() as usize + 1];
    for (h, v) in f.entries() {
        parts[g.length(h) as usize].push((h.clone(), *v));
    }
    parts.into_iter().map(|p| GroupFunction::from_entries(g, p)).collect()
}

/// `lower(||f||_{B(l^q)}) <= sum_n C (1+n)^D ||f 1_{S_n}||_q <= K ||f||_{S^{D+1}_q}`.
/// The first step relies on the fitted polynomial and fails only the
/// certified chain when the fit is too small; the second is Hölder.
pub fn containment_check(f: &GroupFunction, params: &SobolevParams, sched: &TruncationSchedule) -> Result<CheckReport> {
    let q = params.q;
    let est = lower_bound_truncated(f, q, sched)?;
    let s_norm = sobolev_norm(f, params.d + 1.0, q);
    let spheres = split_spheres(f)?;
    let route: f64 = spheres
        .iter()
        .enumerate()
        .map(|(n, fn_)| params.c * (1.0 + n as f64).powf(params.d) * fn_.lq_norm(q))
        .sum();
    let mut rep = CheckReport::new("containment");
    let desc = f.group().descriptor();
    let r = est.truncation_radius;
    let direct = Row::sound(desc, q, r, est.lower, s_norm, params.k).labeled("direct");
    let via = Row::sound(desc, q, r, est.lower, route, 1.0).labeled("spheres");
    let holder_ok = sound_le(route, params.k, s_norm);
    rep.push(direct);
    rep.push(via.fail_if(!holder_ok));
    rep.set_detail(&json!({
        "f": f.to_record(),
        "params": params,
        "lower": est.lower,
        "sobolev_norm": s_norm,
        "sphere_route": route,
    }));
    Ok(rep)
}

/// `||f1 * f2||_{S^s_q} <= 2^s K ||f1||_{S^s_q} ||f2||_{S^s_q}`, all exact sums.
pub fn submult_check(f1: &GroupFunction, f2: &GroupFunction, s: f64, q: f64, k: f64) -> Result<CheckReport> {
    let lhs = sobolev_norm(&f1.convolve(f2)?, s, q);
    let rhs = sobolev_norm(f1, s, q) * sobolev_norm(f2, s, q);
    let factor = 2f64.powf(s) * k;
    let mut rep = CheckReport::new("submult");
    rep.push(Row::sound(f1.group().descriptor(), q, 0, lhs, rhs, factor).labeled(format!("s={s}")));
    let slack = if rhs > 0.0 { lhs / (factor * rhs) } else { 0.0 };
    rep.set_detail(&json!({ "s": s, "q": q, "k": k, "lhs": lhs, "rhs": rhs, "factor": factor, "ratio": slack }));
    Ok(rep)
}

/// `a_n = ||f^n||_{S^t_q}^{1/n}` and `b_n = lower(||f^n||_{B(l^q)})^{1/n}`,
/// with the inductive bound `||f^n||_{S^t_q} <= 2^{nt} ||f||_{S^t_q} M^{n-1}`,
/// `M` an upper bound on both `||f||` and `||f*||` in `B(l^q)`.
pub fn power_norm_sequence(
    f: &GroupFunction,
    t: f64,
    q: f64,
    n_max: usize,
    k: Option<f64>,
    sched: &TruncationSchedule,
) -> Result<CheckReport> {
    if n_max == 0 {
        return Err(LabError::Usage("power sequence needs N >= 1".into()));
    }
    let star = star_bracket(f, q, sched)?;
    let m = star.combined_upper;
    let s1 = sobolev_norm(f, t, q);
    let desc = f.group().descriptor();
    let mut rep = CheckReport::new("powerseq");
    let (mut a, mut b) = (Vec::new(), Vec::new());
    let mut truncated = false;
    let mut fn_ = f.clone();
    for n in 1..=n_max {
        if n > 1 {
            if fn_.support_len().saturating_mul(f.support_len()) > POWER_BUDGET {
                truncated = true;
                rep.note(format!("stopped before n = {n}: convolution budget exceeded"));
                break;
            }
            fn_ = fn_.convolve(f)?;
        }
        let sn = sobolev_norm(&fn_, t, q);
        let lower = lower_bound_truncated(&fn_, q, sched)?.lower;
        let ni = n as i32;
        let bound = 2f64.powf(n as f64 * t) * s1 * m.powi(ni - 1);
        let (an, bn) = (sn.powf(1.0 / n as f64), lower.powf(1.0 / n as f64));
        let mut row = Row::sound(desc, q, n, sn, bound, 1.0).labeled("inductive");
        if let Some(k) = k {
            row = row.warn_if(an * k * (1.0 + 1e-9) < bn);
        }
        rep.push(row);
        a.push(an);
        b.push(bn);
    }
    let gap = match (a.last(), b.last()) {
        (Some(x), Some(y)) => (x - y).abs(),
        _ => 0.0,
    };
    if truncated && rep.verdict == Verdict::Pass {
        rep.note("sequence truncated");
    }
    rep.set_detail(&json!({
        "t": t,
        "q": q,
        "a": a,
        "b": b,
        "trend_gap": gap,
        "upper_bound_used": m,
        "truncated": truncated,
    }));
    Ok(rep)
}
