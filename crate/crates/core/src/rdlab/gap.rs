use serde::{Deserialize, Serialize};
use serde_json::json;

use super::rel_diff;
use crate::error::{LabError, Result};
use crate::funcalg::{random_function, FunctionRecord, GroupFunction, RandomMode, C64};
use crate::group::{Group, GroupSpec};
use crate::opnorm::{lower_bound_truncated, star_bracket, StarNormEstimate, TruncationSchedule};
use crate::report::{sound_le, CheckReport, Row, Verdict};
use crate::seed;

/// Largest group order accepted by [`amplify_check`].
pub const AMPLIFY_LIMIT: usize = 512;

/// A function on a finite group with a certified involution gap.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapWitness {
    pub group: GroupSpec,
    pub f: FunctionRecord,
    #[serde(with = "crate::numfmt::ext")]
    pub p: f64,
    /// Certified lower bound on `max(r, 1/r) - 1`, `r = ||f*|| / ||f||`.
    pub gap_lower: f64,
    /// The same quantity from best estimates.
    pub gap_best: f64,
    pub estimate: StarNormEstimate,
}

/// Effort per catalog group.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OberlinBudget {
    pub samples: usize,
    pub ascent_steps: usize,
    /// Multistart count used while searching; the final witness uses the
    /// caller's schedule.
    pub search_starts: usize,
}

impl Default for OberlinBudget {
    fn default() -> Self {
        OberlinBudget { samples: 8, ascent_steps: 60, search_starts: 4 }
    }
}

pub fn certified_gap(est: &StarNormEstimate) -> f64 {
    let (b, s) = (&est.base, &est.star);
    let mut gap = 0.0f64;
    if b.upper > 0.0 {
        gap = gap.max(s.lower / b.upper - 1.0);
    }
    if s.upper > 0.0 {
        gap = gap.max(b.lower / s.upper - 1.0);
    }
    gap
}

pub fn best_gap(est: &StarNormEstimate) -> f64 {
    ratio_gap(est.base.best(), est.star.best())
}

fn ratio_gap(base: f64, star: f64) -> f64 {
    if base <= 0.0 || star <= 0.0 {
        return 0.0;
    }
    let r = star / base;
    r.max(1.0 / r) - 1.0
}

pub fn gap_witness(f: &GroupFunction, p: f64, sched: &TruncationSchedule) -> Result<GapWitness> {
    let estimate = star_bracket(f, p, sched)?;
    Ok(GapWitness {
        group: f.group().spec().clone(),
        f: f.to_record(),
        p,
        gap_lower: certified_gap(&estimate),
        gap_best: best_gap(&estimate),
        estimate,
    })
}

fn search_objective(f: &GroupFunction, p: f64, sched: &TruncationSchedule) -> Result<f64> {
    let a = lower_bound_truncated(f, p, sched)?.lower;
    let b = lower_bound_truncated(&f.involution(), p, sched)?.lower;
    Ok(ratio_gap(a, b))
}

fn perturb(f: &GroupFunction, scale: f64, seed: u64) -> Result<GroupFunction> {
    let g = f.group();
    let mut rng = seed::rng(seed);
    let noise = g
        .ball(g.diameter().unwrap_or(0))?
        .into_iter()
        .map(|h| (h, C64::new(rand::Rng::gen_range(&mut rng, -1.0..1.0), rand::Rng::gen_range(&mut rng, -1.0..1.0)) * scale))
        .collect::<Vec<_>>();
    f.add(&GroupFunction::from_entries(g, noise)?)
}

/// Random starts plus greedy local ascent on the entries of `f`, per catalog
/// group. Abelian members act as controls: any certified gap on them fails.
pub fn oberlin_search(
    catalog: &[GroupSpec],
    p: f64,
    budget: &OberlinBudget,
    sched: &TruncationSchedule,
) -> Result<(GapWitness, CheckReport)> {
    if catalog.is_empty() {
        return Err(LabError::Usage("empty catalog".into()));
    }
    let search = sched.clone().starts(budget.search_starts.max(1));
    let mut rep = CheckReport::new("oberlin");
    let mut best: Option<GapWitness> = None;
    let mut per_group = Vec::new();
    for (gi, spec) in catalog.iter().enumerate() {
        let g = spec.build()?;
        let Some(diam) = g.diameter() else {
            return Err(LabError::Usage(format!("{spec} is not finite")));
        };
        let mut top: Option<(f64, GroupFunction)> = None;
        for s in 0..budget.samples {
            let mut f = random_function(&g, diam, RandomMode::Complex, 1.0, seed::derive(sched.seed, &[gi as u64, s as u64]))?;
            let mut val = search_objective(&f, p, &search)?;
            let mut step = 0.5;
            for k in 0..budget.ascent_steps {
                let cand = perturb(&f, step, seed::derive(sched.seed, &[gi as u64, s as u64, k as u64 + 1]))?;
                if cand.is_zero() {
                    continue;
                }
                let v = search_objective(&cand, p, &search)?;
                if v > val {
                    (f, val) = (cand, v);
                } else {
                    step *= 0.8;
                }
            }
            log::debug!("{spec} sample {s}: search gap {val:.6}");
            if top.as_ref().is_none_or(|(b, _)| val > *b) {
                top = Some((val, f));
            }
        }
        let (_, f) = top.expect("at least one sample");
        let w = gap_witness(&f, p, sched)?;
        let control = g.is_abelian();
        let sound = sound_le(w.estimate.base.lower, 1.0, w.estimate.base.upper)
            && sound_le(w.estimate.star.lower, 1.0, w.estimate.star.upper)
            && w.gap_lower >= 0.0;
        let mut row = Row::sound(g.descriptor(), p, w.estimate.base.truncation_radius, w.gap_lower, w.gap_best, 1.0)
            .labeled(if control { "control" } else { "candidate" });
        row.verdict = if !sound || (control && w.gap_lower >= 1e-6) { Verdict::Fail } else { Verdict::Pass };
        rep.push(row);
        per_group.push(json!({ "group": spec, "gap_lower": w.gap_lower, "gap_best": w.gap_best }));
        let better = best.as_ref().is_none_or(|b| (w.gap_lower, w.gap_best) > (b.gap_lower, b.gap_best));
        if (better && !control) || (best.is_none() && gi + 1 == catalog.len()) {
            best = Some(w);
        }
    }
    let best = best.expect("catalog is nonempty");
    rep.note(format!("best witness on {} with certified gap {:.6e}", best.group, best.gap_lower));
    if best.gap_lower == 0.0 {
        rep.note("no certified gap on this catalog; the search is exploratory");
    }
    rep.set_detail(&json!({ "p": p, "budget": budget, "groups": per_group, "witness": best }));
    Ok((best, rep))
}

/// Rebuild `f_n = (f/M)^{(x)n}` on `G0^n` with `M` the witness's lower
/// bound on `||f||` and check both component norms against the
/// multiplicative prediction.
pub fn amplify_check(w: &GapWitness, n: usize, sched: &TruncationSchedule, tol: f64) -> Result<CheckReport> {
    if n == 0 {
        return Err(LabError::Usage("amplification needs n >= 1".into()));
    }
    let g0 = w.group.build()?;
    let order = g0.order().ok_or_else(|| LabError::Usage("witness group is not finite".into()))?;
    let size = (order as f64).powi(n as i32);
    if size > AMPLIFY_LIMIT as f64 {
        return Err(LabError::Resource {
            reason: format!("|G0|^{n} = {size} exceeds {AMPLIFY_LIMIT}"),
            largest_radius: 0,
        });
    }
    let f = GroupFunction::from_record(&g0, &w.f)?;
    let m = w.estimate.base.lower;
    if m <= 0.0 {
        return Err(LabError::Usage("witness has a zero norm estimate".into()));
    }
    let target = Group::power(&w.group, n, g0.limits())?;
    let fnn = f.scale(C64::new(1.0 / m, 0.0)).tensor_power(&target)?;
    let est = star_bracket(&fnn, w.p, sched)?;
    let ni = n as i32;
    let (b0, s0) = (&w.estimate.base, &w.estimate.star);
    let mut rep = CheckReport::new("amplify");
    let desc = target.descriptor();
    let r = est.base.truncation_radius;
    for (label, got, lo, hi, best) in [
        ("base", &est.base, b0.lower / m, b0.upper / m, 1.0),
        ("star", &est.star, s0.lower / m, s0.upper / m, (s0.best() / m).powi(ni)),
    ] {
        let pred_upper = hi.powi(ni);
        let pred_lower = lo.powi(ni);
        let rel = rel_diff(got.best(), best);
        let mut row = Row::sound(desc, w.p, r, got.lower, pred_upper, 1.0).labeled(label).warn_if(rel > tol);
        if !sound_le(pred_lower, 1.0, got.upper) {
            row.verdict = Verdict::Fail;
        }
        rep.push(row);
    }
    let gap_n = best_gap(&est);
    let predicted = (1.0 + w.gap_best).powi(ni) - 1.0;
    if (gap_n - predicted).abs() > tol * (1.0 + predicted) {
        rep.warn(format!("gap {gap_n:.6e} differs from predicted {predicted:.6e}"));
    }
    rep.set_detail(&json!({
        "n": n,
        "p": crate::funcalg::ExponentPair::new(w.p)?,
        "normalizer": m,
        "estimate": est,
        "gap": gap_n,
        "predicted_gap": predicted,
        "gap_lower": certified_gap(&est),
    }));
    Ok(rep)
}
