use serde_json::json;

use super::rel_diff;
use crate::error::{LabError, Result};
use crate::funcalg::{ExponentPair, GroupFunction};
use crate::group::{Group, GroupSpec, SubgroupEmbedding};
use crate::opnorm::{bracket, TruncationSchedule};
use crate::report::{CheckReport, Row};

/// `||f||_{B(l^p)}` against `||f*||_{B(l^q)}`. Endpoints must agree exactly;
/// elsewhere the brackets must overlap, or else the best estimates must
/// agree within `tol` (warning).
pub fn duality_check(f: &GroupFunction, p: f64, sched: &TruncationSchedule, tol: f64) -> Result<CheckReport> {
    let pair = ExponentPair::new(p)?;
    let b = bracket(f, pair.p, sched)?;
    let d = bracket(&f.involution(), pair.q, sched)?;
    let mut rep = CheckReport::new("duality");
    let desc = f.group().descriptor();
    let best_rel = rel_diff(b.best(), d.best());
    let row = if pair.is_endpoint() {
        let exact = b.lower == d.lower && b.upper == d.upper;
        Row::sound(desc, p, 0, b.lower, d.upper, 1.0).fail_if(!exact)
    } else {
        let lower = b.lower.max(d.lower);
        let upper = b.upper.min(d.upper);
        let mut row = Row::sound(desc, p, b.truncation_radius, lower, upper, 1.0);
        if !b.overlaps(&d) {
            if best_rel <= tol {
                row.verdict = crate::report::Verdict::Warn;
            }
            rep.note(format!("brackets [{}, {}] and [{}, {}] do not overlap", b.lower, b.upper, d.lower, d.upper));
        }
        row
    };
    rep.push(row);
    rep.set_detail(&json!({
        "f": f.to_record(),
        "p": crate::funcalg::ExponentPair::new(p)?,
        "base": b,
        "dual": d,
        "best_relative_difference": best_rel,
        "tolerance": tol,
    }));
    Ok(rep)
}

/// Bracket of `f` on `H` against the bracket of its pushforward in `G`.
pub fn subgroup_check(
    f: &GroupFunction,
    emb: &SubgroupEmbedding,
    p: f64,
    sched: &TruncationSchedule,
    tol: f64,
) -> Result<CheckReport> {
    let bh = bracket(f, p, sched)?;
    let fg = f.pushforward(emb)?;
    let bg = bracket(&fg, p, sched)?;
    let mut rep = CheckReport::new("subgroup");
    let h = emb.source();
    let lower = bh.lower.max(bg.lower);
    let upper = bh.upper.min(bg.upper);
    let both_finite = h.is_finite() && emb.target().is_finite();
    let best_rel = rel_diff(bh.best(), bg.best());
    let row = Row::sound(emb.target().descriptor(), p, bg.truncation_radius, lower, upper, 1.0)
        .labeled(format!("{} -> {}", h.descriptor(), emb.target().descriptor()))
        .warn_if(both_finite && best_rel > tol);
    rep.push(row);
    if h.is_finite() || h.is_amenable() {
        rep.note("subgroup side is authoritative (finite or amenable)");
    }
    if !both_finite {
        rep.note("truncated lower bounds on the larger group approach the subgroup value as R grows");
    }
    rep.set_detail(&json!({
        "f": f.to_record(),
        "embedding": emb.kind(),
        "subgroup": bh,
        "ambient": bg,
        "best_relative_difference": best_rel,
    }));
    Ok(rep)
}

/// `||f1 (x) f2|| = ||f1|| ||f2||` on `H1 x H2` for finite groups.
pub fn tensor_check(
    f1: &GroupFunction,
    f2: &GroupFunction,
    p: f64,
    sched: &TruncationSchedule,
    tol: f64,
) -> Result<CheckReport> {
    let (g1, g2) = (f1.group(), f2.group());
    let (Some(n1), Some(n2)) = (g1.order(), g2.order()) else {
        return Err(LabError::Usage("tensor_check needs finite groups".into()));
    };
    if n1 * n2 > sched.dense_limit {
        return Err(LabError::Resource {
            reason: format!("|H1 x H2| = {} exceeds the dense limit {}", n1 * n2, sched.dense_limit),
            largest_radius: 0,
        });
    }
    let target = Group::from_spec(&GroupSpec::Product(vec![g1.spec().clone(), g2.spec().clone()]), g1.limits())?;
    let t = GroupFunction::tensor(f1, f2, &target)?;
    let b1 = bracket(f1, p, sched)?;
    let b2 = bracket(f2, p, sched)?;
    let bt = bracket(&t, p, sched)?;
    let mut rep = CheckReport::new("tensor");
    let product_best = b1.best() * b2.best();
    let rel = rel_diff(bt.best(), product_best);
    let reverse_ok = crate::report::sound_le(b1.lower * b2.lower, 1.0, bt.upper);
    rep.push(
        Row::sound(target.descriptor(), p, bt.truncation_radius, bt.lower, b1.upper * b2.upper, 1.0)
            .fail_if(!reverse_ok)
            .warn_if(rel > tol),
    );
    rep.set_detail(&json!({
        "f1": f1.to_record(),
        "f2": f2.to_record(),
        "left": b1,
        "right": b2,
        "tensor": bt,
        "relative_error": rel,
        "tolerance": tol,
    }));
    Ok(rep)
}
