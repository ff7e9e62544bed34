use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::{LabError, Result};
use crate::funcalg::{conjugate, random_function, GroupFunction, RandomMode};
use crate::group::Group;
use crate::opnorm::{lower_bound_truncated, TruncationSchedule};
use crate::report::{CheckReport, Row, Verdict};
use crate::seed;

/// Sample families for the (RD)_q scan. `δ_e` is always included.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    Spheres,
    Balls,
    RandomNonneg,
    RandomSigned,
}

impl std::str::FromStr for Family {
    type Err = LabError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "spheres" => Ok(Family::Spheres),
            "balls" => Ok(Family::Balls),
            "random-nonneg" => Ok(Family::RandomNonneg),
            "random-signed" => Ok(Family::RandomSigned),
            other => Err(LabError::Parse(format!("unknown rd family `{other}`"))),
        }
    }
}

/// Per-radius sup of `lower(||f||_{B(l^q)}) / ||f||_q` and the fitted
/// polynomial `C (1+n)^D`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RdFit {
    pub q: f64,
    pub radii: Vec<usize>,
    pub ratios: Vec<f64>,
    pub c_hat: f64,
    pub d_hat: f64,
    pub families: Vec<Family>,
    pub note: String,
}

impl RdFit {
    pub fn predict(&self, n: usize) -> f64 {
        self.c_hat * (1.0 + n as f64).powf(self.d_hat)
    }

    /// Least-squares slope of `ln ratio` against `ln(1+n)`, floored at 0,
    /// then `C` raised until the curve covers every point.
    fn fit(q: f64, radii: Vec<usize>, ratios: Vec<f64>, families: Vec<Family>) -> RdFit {
        let pts: Vec<(f64, f64)> =
            radii.iter().zip(&ratios).map(|(&n, &r)| ((1.0 + n as f64).ln(), r.ln())).collect();
        let k = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let d_hat = if sxx > 0.0 { (sxy / sxx).max(0.0) } else { 0.0 };
        let c_hat = pts.iter().map(|&(x, y)| (y - d_hat * x).exp()).fold(0.0, f64::max);
        RdFit {
            q,
            radii,
            ratios,
            c_hat,
            d_hat,
            families,
            note: "ratios are sups over a finite sample family, so they are lower envelopes of the true (RD)_q ratios"
                .into(),
        }
    }
}

fn members(g: &Group, n: usize, fam: Family, samples: usize, seed: u64) -> Result<Vec<GroupFunction>> {
    Ok(match fam {
        Family::Spheres => vec![GroupFunction::sphere_indicator(g, n)?],
        Family::Balls => vec![GroupFunction::ball_indicator(g, n)?],
        Family::RandomNonneg | Family::RandomSigned => {
            let mode = if fam == Family::RandomNonneg { RandomMode::NonNeg } else { RandomMode::Real };
            (0..samples)
                .map(|s| random_function(g, n, mode, 1.0, seed::derive(seed, &[n as u64, fam as u64, s as u64])))
                .collect::<Result<_>>()?
        }
    })
}

/// Scan `sup_f lower(||f||_{B(l^q)}) / ||f||_q` over supports in `B_n`.
/// Each ratio is also checked against the Hölder ceiling `|B_n|^{1/p}`.
pub fn rd_scan(
    group: &Group,
    q: f64,
    radii: &[usize],
    families: &[Family],
    samples: usize,
    sched: &TruncationSchedule,
) -> Result<(RdFit, CheckReport)> {
    if !(q > 1.0 && q.is_finite()) {
        return Err(LabError::Usage(format!("rd_scan needs 1 < q < inf, got {q}")));
    }
    if radii.is_empty() {
        return Err(LabError::Usage("rd_scan needs at least one radius".into()));
    }
    let p = conjugate(q);
    let mut rep = CheckReport::new("rd_scan");
    let mut ratios = Vec::with_capacity(radii.len());
    for &n in radii {
        let mut fs = vec![GroupFunction::identity(group)];
        for &fam in families {
            fs.extend(members(group, n, fam, samples, sched.seed)?);
        }
        let mut sup = 0.0f64;
        for f in &fs {
            match lower_bound_truncated(f, q, sched) {
                Ok(est) => sup = sup.max(est.lower / f.lq_norm(q)),
                Err(e @ LabError::Consistency(_)) => return Err(e),
                Err(e) => log::warn!("rd_scan: skipping sample at n = {n}: {e}"),
            }
        }
        let ceiling = (group.ball_index(n)?.ball_len(n) as f64).powf(1.0 / p);
        rep.push(Row::sound(group.descriptor(), q, n, sup, ceiling, 1.0).labeled("holder"));
        ratios.push(sup);
    }
    let fit = RdFit::fit(q, radii.to_vec(), ratios, families.to_vec());
    if fit.ratios.iter().any(|&r| r < 1.0 - 1e-9) {
        rep.fail("a ratio fell below the delta_e floor");
    }
    rep.note(fit.note.clone());
    rep.set_detail(&json!({ "fit": fit, "samples": samples, "schedule": sched }));
    Ok((fit, rep))
}

/// Exact finite-sum quantities of the Mazur-map argument for one pair,
/// with `alpha = q'/q`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MazurChain {
    pub alpha: f64,
    /// `(f_a * phi_a)(g) >= (|f| * |phi|)(g)^alpha` at every g.
    pub pointwise: bool,
    /// `||phi_a||_q^q` against `||phi||_{q'}^{q'}`.
    pub identity_error: f64,
    /// `||f * phi||_{q'}^{q'}`
    pub conv: f64,
    /// `||(|f| * |phi|)||_{q'}^{q'} = ||(|f| * |phi|)_a||_q^q`
    pub abs_conv: f64,
    pub abs_conv_alpha: f64,
    /// `||f_a * phi_a||_q^q`
    pub mazur_conv: f64,
    /// `||f_a * phi_a||_q / (||f_a||_q ||phi_a||_q)`, the ratio P(n) bounds.
    pub rd_ratio: f64,
    pub holds: bool,
}

const CHAIN_SLACK: f64 = 1e-12;

pub fn mazur_chain(f: &GroupFunction, phi: &GroupFunction, q: f64, qp: f64) -> Result<MazurChain> {
    if !(1.0 < qp && qp <= q && q.is_finite()) {
        return Err(LabError::Usage(format!("mazur chain needs 1 < q' <= q < inf, got q = {q}, q' = {qp}")));
    }
    let alpha = qp / q;
    let fa = f.mazur_power(alpha);
    let pa = phi.mazur_power(alpha);
    let mazur = fa.convolve(&pa)?;
    let absc = f.abs().convolve(&phi.abs())?;
    let pointwise =
        absc.entries().all(|(g, v)| v.re.powf(alpha) <= mazur.get(g).re * (1.0 + CHAIN_SLACK));
    let lhs_id = pa.lq_norm(q).powf(q);
    let rhs_id = phi.lq_norm(qp).powf(qp);
    let identity_error = (lhs_id - rhs_id).abs() / rhs_id.max(f64::MIN_POSITIVE);
    let conv = f.convolve(phi)?.lq_norm(qp).powf(qp);
    let abs_conv = absc.lq_norm(qp).powf(qp);
    let abs_conv_alpha = absc.mazur_power(alpha).lq_norm(q).powf(q);
    let mazur_conv = mazur.lq_norm(q).powf(q);
    let le = |a: f64, b: f64| a <= b * (1.0 + CHAIN_SLACK);
    let holds = pointwise
        && identity_error <= CHAIN_SLACK
        && le(conv, abs_conv)
        && (abs_conv - abs_conv_alpha).abs() <= CHAIN_SLACK * abs_conv.max(f64::MIN_POSITIVE)
        && le(abs_conv_alpha, mazur_conv);
    let denom = fa.lq_norm(q) * pa.lq_norm(q);
    Ok(MazurChain {
        alpha,
        pointwise,
        identity_error,
        conv,
        abs_conv,
        abs_conv_alpha,
        mazur_conv,
        rd_ratio: if denom > 0.0 { mazur.lq_norm(q) / denom } else { 0.0 },
        holds,
    })
}

/// Sampling parameters for [`rd_transfer_check`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransferOptions {
    pub samples: usize,
    pub slack: f64,
    pub mode: RandomMode,
    pub density: f64,
    pub mazur_pairs: usize,
    /// Support radius cap for Mazur pairs.
    pub mazur_radius: usize,
}

impl Default for TransferOptions {
    fn default() -> Self {
        TransferOptions { samples: 200, slack: 0.3, mode: RandomMode::NonNeg, density: 0.5, mazur_pairs: 200, mazur_radius: 4 }
    }
}

/// Measured ratios at `q'` against `C^theta (1+n)^{theta D}` from a q-fit,
/// plus the Mazur chain on sampled pairs. Ratio violations only warn; a
/// broken Mazur chain fails.
pub fn rd_transfer_check(
    group: &Group,
    fit: &RdFit,
    qp: f64,
    opts: &TransferOptions,
    sched: &TruncationSchedule,
) -> Result<CheckReport> {
    let q = fit.q;
    if !(1.0 < qp && qp <= q) {
        return Err(LabError::Usage(format!("transfer needs 1 < q' <= q, got q = {q}, q' = {qp}")));
    }
    let theta = (1.0 - 1.0 / qp) / (1.0 - 1.0 / q);
    let radii = &fit.radii;
    let mut rep = CheckReport::new("rd_transfer");
    let mut violations = 0usize;
    let mut worst = 0.0f64;
    for i in 0..opts.samples {
        let n = radii[i % radii.len()];
        let f = random_function(group, n, opts.mode, opts.density, seed::derive(sched.seed, &[1, i as u64]))?;
        let est = lower_bound_truncated(&f, qp, sched)?;
        let ratio = est.lower / f.lq_norm(qp);
        let bound = fit.c_hat.powf(theta) * (1.0 + n as f64).powf(theta * fit.d_hat);
        let row = Row::sound(group.descriptor(), qp, n, ratio, bound, 1.0 + opts.slack).labeled("transfer");
        worst = worst.max(ratio / bound);
        let row = if row.verdict == Verdict::Fail {
            violations += 1;
            Row { verdict: Verdict::Warn, ..row }
        } else {
            row
        };
        rep.push(row);
    }
    let mut broken = 0usize;
    let mut max_identity = 0.0f64;
    let mut max_rd = 0.0f64;
    for i in 0..opts.mazur_pairs {
        let n = radii[i % radii.len()].min(opts.mazur_radius);
        let s = seed::derive(sched.seed, &[2, i as u64]);
        let f = random_function(group, n, RandomMode::Complex, opts.density, seed::derive(s, &[0]))?;
        let phi = random_function(group, n, RandomMode::Complex, opts.density, seed::derive(s, &[1]))?;
        let c = mazur_chain(&f, &phi, q, qp)?;
        max_identity = max_identity.max(c.identity_error);
        max_rd = max_rd.max(c.rd_ratio / fit.predict(2 * n));
        if !c.holds {
            broken += 1;
        }
        let mut row = Row::sound(group.descriptor(), q, n, c.abs_conv_alpha, c.mazur_conv, 1.0).labeled("mazur");
        row.q = qp;
        rep.push(row.fail_if(!c.holds));
    }
    if broken > 0 {
        rep.fail(format!("{broken} Mazur chains broken"));
    }
    if violations > 0 {
        rep.warn(format!("{violations} transfer ratios above the predicted polynomial"));
    }
    rep.note(fit.note.clone());
    rep.set_detail(&json!({
        "q": q,
        "q_prime": qp,
        "theta": theta,
        "fit": fit,
        "options": opts,
        "violations": violations,
        "worst_ratio_over_bound": worst,
        "mazur_broken": broken,
        "mazur_max_identity_error": max_identity,
        "mazur_max_rd_ratio_over_fit": max_rd,
    }));
    Ok(rep)
}

/// Compare `|B_n|^{1/q}` with `P(n) |B_n|^{1/p}` for `p > 2` using the
/// fitted `P`; on groups of exponential growth the local exponent of
/// `|B_n|^{1/q-1/p}` keeps increasing.
pub fn growth_alternative_check(group: &Group, p: f64, radii: &[usize]) -> Result<CheckReport> {
    if !(p > 2.0) {
        return Err(LabError::Usage(format!("growth alternative needs p > 2, got {p}")));
    }
    let q = conjugate(p);
    let e = 1.0 / q - 1.0 / p;
    let max_r = radii.iter().copied().max().unwrap_or(0);
    let sizes = group.ball_sizes(max_r)?;
    let ratios: Vec<f64> = radii.iter().map(|&n| (sizes[n] as f64).powf(e)).collect();
    let fit = RdFit::fit(p, radii.to_vec(), ratios.clone(), Vec::new());
    let mut rep = CheckReport::new("growth");
    for (&n, _) in radii.iter().zip(&ratios) {
        let b = sizes[n] as f64;
        rep.push(Row::sound(group.descriptor(), p, n, b.powf(1.0 / q), b.powf(1.0 / p), fit.predict(n)).labeled("count"));
    }
    let local: Vec<f64> = radii
        .windows(2)
        .zip(ratios.windows(2))
        .filter(|(r, _)| r[1] > r[0])
        .map(|(r, v)| (v[1] / v[0]).ln() / ((1.0 + r[1] as f64) / (1.0 + r[0] as f64)).ln())
        .collect();
    let expected = group.growth_degree().map(|d| d as f64 * e);
    match expected {
        Some(d) => {
            if fit.d_hat > d + 0.5 {
                rep.warn(format!("fitted degree {:.3} exceeds growth prediction {d:.3}", fit.d_hat));
            }
        }
        None => {
            let increasing = local.windows(2).all(|w| w[1] >= w[0]);
            if !increasing {
                rep.warn("local exponent is not increasing");
            } else {
                rep.note("local exponent increases with n: no fixed-degree polynomial majorizes the ratio");
            }
        }
    }
    rep.set_detail(&json!({
        "p": p,
        "q": q,
        "ball_sizes": sizes,
        "ratios": ratios,
        "local_exponents": local,
        "fit": fit,
        "expected_degree": expected,
    }));
    Ok(rep)
}
