use serde::{Deserialize, Serialize};
use serde_json::json;

use super::sobolev_norm;
use crate::error::{LabError, Result};
use crate::funcalg::{random_function, GroupFunction, RandomMode, C64};
use crate::group::Element;
use crate::opnorm::{bracket, operator_lower_bound, TruncatedOperator, TruncationSchedule, WeightMode};
use crate::report::{CheckReport, Row, Verdict};
use crate::seed;

/// `delta^k` of left convolution by `base`: the kernel
/// `T_{g,h} = f(g h^-1) (l(g) - l(h))^k`.
#[derive(Debug, Clone)]
pub struct DerivationKernel {
    pub base: GroupFunction,
    pub order: u32,
}

impl DerivationKernel {
    pub fn new(base: GroupFunction, order: u32) -> Result<Self> {
        if order == 0 {
            return Err(LabError::Usage("derivation order must be >= 1".into()));
        }
        Ok(DerivationKernel { base, order })
    }
}

/// Exact `(delta^k(f) xi)(g) = sum_h f(g h^-1) xi(h) (l(g) - l(h))^k`.
pub fn derivation_apply(kernel: &DerivationKernel, xi: &GroupFunction) -> Result<GroupFunction> {
    let g = kernel.base.group();
    if xi.group() != g {
        return Err(LabError::Usage("derivation operands live on different groups".into()));
    }
    let k = kernel.order as i32;
    let mut out: Vec<(Element, C64)> = Vec::with_capacity(kernel.base.support_len() * xi.support_len());
    for (h, xv) in xi.entries() {
        let lh = g.length(h) as f64;
        for (a, fv) in kernel.base.entries() {
            let x = g.multiply(a, h)?;
            let d = g.length(&x) as f64 - lh;
            if d != 0.0 {
                out.push((x, fv * xv * d.powi(k)));
            }
        }
    }
    GroupFunction::from_entries(g, out)
}

/// Max entry of `delta(f1 * f2) xi - delta(f1)(f2 * xi) - f1 * (delta(f2) xi)`.
pub fn leibniz_error(f1: &GroupFunction, f2: &GroupFunction, xi: &GroupFunction) -> Result<f64> {
    let d = |f: &GroupFunction| DerivationKernel::new(f.clone(), 1);
    let lhs = derivation_apply(&d(&f1.convolve(f2)?)?, xi)?;
    let a = derivation_apply(&d(f1)?, &f2.convolve(xi)?)?;
    let b = f1.convolve(&derivation_apply(&d(f2)?, xi)?)?;
    let diff = lhs.sub(&a)?.sub(&b)?;
    Ok(diff.lq_norm(f64::INFINITY))
}

/// Sandwich for `||delta^k f||_{B(l^q)}`:
/// `||f l^k||_q <= lower <= upper(||l^k |f| ||) <= K ||f (1+l)^{k+s}||_q`.
pub fn derivation_norm_bounds(
    f: &GroupFunction,
    k: u32,
    q: f64,
    s: f64,
    containment: f64,
    sched: &TruncationSchedule,
) -> Result<CheckReport> {
    if k == 0 {
        return Err(LabError::Usage("derivation order must be >= 1".into()));
    }
    let floor = f.weight_k(k).lq_norm(q);
    let sweep = operator_lower_bound(f, q, WeightMode::Derivation { k }, sched)?;
    let lower = sweep.value.max(floor);
    let dominating = bracket(&f.abs().weight_k(k), q, sched)?;
    let ceiling = containment * sobolev_norm(f, k as f64 + s, q);
    let desc = f.group().descriptor();
    let r = dominating.truncation_radius;
    let mut rep = CheckReport::new("derivation");
    let mut first = Row::sound(desc, q, r, floor, lower, 1.0).labeled("delta_e");
    if sweep.value < floor * (1.0 - 1e-9) {
        first.verdict = Verdict::Warn;
    }
    rep.push(first);
    rep.push(Row::sound(desc, q, r, lower, dominating.upper, 1.0).labeled("domination"));
    let mut last = Row::sound(desc, q, r, dominating.lower, ceiling, 1.0).labeled("ceiling");
    if last.verdict == Verdict::Fail {
        last.verdict = Verdict::Warn;
    }
    rep.push(last);
    rep.set_detail(&json!({
        "f": f.to_record(),
        "k": k,
        "q": q,
        "s": s,
        "containment_constant": containment,
        "floor": floor,
        "lower": lower,
        "dominating": dominating,
        "ceiling": ceiling,
    }));
    Ok(rep)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowOptions {
    /// Positive, strictly decreasing.
    pub t_values: Vec<f64>,
    pub radius: usize,
    pub p: f64,
    pub samples: usize,
    pub seed: u64,
}

impl Default for FlowOptions {
    fn default() -> Self {
        FlowOptions { t_values: vec![0.1, 0.05, 0.025], radius: 4, p: 2.0, samples: 8, seed: 0 }
    }
}

/// Finite-difference consistency of `a_t(f)` with `i delta(f)` on the
/// truncation `B_R -> B_{R+m}`, plus `||(a_t e_g - e_g) v||_p <= t l(g) ||v||_p`.
pub fn flow_consistency_check(f: &GroupFunction, opts: &FlowOptions) -> Result<CheckReport> {
    let ts = &opts.t_values;
    if ts.is_empty() || ts.iter().any(|&t| !(t > 0.0)) || ts.windows(2).any(|w| w[1] >= w[0]) {
        return Err(LabError::Usage("t values must be positive and strictly decreasing".into()));
    }
    let g = f.group();
    let desc = g.descriptor();
    let plain = TruncatedOperator::<C64>::new(f, opts.radius, WeightMode::Plain)?;
    let deriv = TruncatedOperator::<C64>::new(f, opts.radius, WeightMode::Derivation { k: 1 })?;
    let mut errors = Vec::with_capacity(ts.len());
    for &t in ts {
        let flow = TruncatedOperator::<C64>::new(f, opts.radius, WeightMode::Flow { t })?;
        let mut err = 0.0f64;
        for j in 0..plain.ncols() {
            let cols = plain.entries_of_column(j).zip(flow.entries_of_column(j)).zip(deriv.entries_of_column(j));
            for (((_, a), (_, b)), (_, d)) in cols {
                let fd = (b - a) / t - C64::i() * d;
                err = err.max(fd.norm());
            }
        }
        errors.push(err);
    }
    let mut rep = CheckReport::new("flow");
    let mut ratios = Vec::new();
    for (i, w) in errors.windows(2).enumerate() {
        let (e0, e1) = (w[0], w[1]);
        let ratio = if e1 > 0.0 { e0 / e1 } else if e0 == 0.0 { f64::NAN } else { f64::INFINITY };
        ratios.push(ratio);
        let mut row = Row::sound(desc, opts.p, opts.radius, e1, e0, 1.0).labeled(format!("t={}", ts[i + 1]));
        row.verdict = if ratio.is_nan() || (1.5..=2.5).contains(&ratio) { Verdict::Pass } else { Verdict::Fail };
        rep.push(row);
    }
    if errors.iter().all(|&e| e == 0.0) {
        rep.note("finite-difference error vanishes identically");
    }
    let mut worst_lipschitz = 0.0f64;
    for s in 0..opts.samples {
        let v = random_function(g, opts.radius, RandomMode::Complex, 1.0, seed::derive(opts.seed, &[s as u64]))?;
        let vn = v.lq_norm(opts.p);
        for (a, _) in f.entries() {
            let la = g.length(a) as f64;
            for &t in ts {
                let mut terms = Vec::with_capacity(v.support_len());
                for (h, hv) in v.entries() {
                    let x = g.multiply(a, h)?;
                    let d = g.length(&x) as f64 - g.length(h) as f64;
                    terms.push((x, (C64::from_polar(1.0, t * d) - 1.0) * hv));
                }
                let lhs = GroupFunction::from_entries(g, terms)?.lq_norm(opts.p);
                let rhs = t * la * vn;
                let ratio = if rhs > 0.0 { lhs / rhs } else if lhs > 0.0 { f64::INFINITY } else { 0.0 };
                worst_lipschitz = worst_lipschitz.max(ratio);
            }
        }
    }
    if opts.samples > 0 {
        rep.push(Row::sound(desc, opts.p, opts.radius, worst_lipschitz, 1.0, 1.0).labeled("lipschitz"));
    }
    rep.set_detail(&json!({
        "t_values": ts,
        "errors": errors,
        "ratios": ratios.iter().map(|r| if r.is_finite() { json!(r) } else { json!(r.to_string()) }).collect::<Vec<_>>(),
        "lipschitz_worst_ratio": worst_lipschitz,
        "options": opts,
    }));
    Ok(rep)
}
