use serde::Serialize;
use serde_json::json;

use crate::error::{LabError, Result};
use crate::funcalg::{GroupFunction, C64, PRUNE};
use crate::report::{CheckReport, Row, Verdict};

/// Residuals below this are treated as roundoff in the quadratic-decay test.
const ROUNDOFF: f64 = 1e-14;

#[derive(Debug, Clone, Serialize)]
pub struct Promotion {
    pub iterations: usize,
    /// `||e*e - e||_1` plus all mass pruned so far, starting with `e0`.
    pub residuals: Vec<f64>,
    pub pruned_mass: f64,
    pub converged: bool,
}

fn residual(e: &GroupFunction) -> Result<f64> {
    Ok(e.convolve(e)?.sub(e)?.l1())
}

/// Newton-type promotion `e <- 3 e*e - 2 e*e*e` of an almost idempotent.
/// Certification is in l^1, which dominates every operator norm.
pub fn idempotent_promote(e0: &GroupFunction, tol: f64, max_iter: usize) -> Result<(GroupFunction, CheckReport)> {
    let r0 = residual(e0)?;
    if r0 >= 0.25 {
        return Err(LabError::Usage(format!("||e0*e0 - e0||_1 = {r0} is not below 1/4")));
    }
    let desc = e0.group().descriptor().to_string();
    let mut e = e0.clone();
    let mut pruned = 0.0;
    let mut out = Promotion { iterations: 0, residuals: vec![r0], pruned_mass: 0.0, converged: r0 < tol };
    let mut rep = CheckReport::new("idempotent");
    let mut growth = 0;
    while !out.converged && out.iterations < max_iter {
        let e2 = e.convolve(&e)?;
        let e3 = e2.convolve(&e)?;
        e = e2.scale(C64::new(3.0, 0.0)).sub(&e3.scale(C64::new(2.0, 0.0)))?;
        pruned += e.prune_below(PRUNE);
        let r = residual(&e)? + pruned;
        let prev = *out.residuals.last().expect("nonempty");
        out.iterations += 1;
        out.residuals.push(r);
        let bound = 10.0 * prev * prev;
        let mut row = Row::sound(&desc, 1.0, out.iterations, r, bound, 1.0).labeled("quadratic");
        if r <= ROUNDOFF {
            row.verdict = Verdict::Pass;
        }
        rep.push(row);
        growth = if r > prev { growth + 1 } else { 0 };
        if growth >= 3 {
            rep.fail(format!("residual grew for 3 consecutive steps, reaching {r:.3e}"));
            break;
        }
        out.converged = r < tol;
    }
    out.pruned_mass = pruned;
    if !out.converged && rep.verdict != Verdict::Fail {
        rep.fail(format!("residual {:.3e} above tolerance {tol:.1e} after {} iterations", out.residuals.last().unwrap(), out.iterations));
    }
    rep.set_detail(&json!({
        "e0": e0.to_record(),
        "tol": tol,
        "max_iter": max_iter,
        "promotion": out,
        "final": e.to_record(),
    }));
    Ok((e, rep))
}
