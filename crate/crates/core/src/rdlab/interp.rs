use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::{LabError, Result};
use crate::funcalg::{conjugate, GroupFunction};
use crate::group::GrowthRate;
use crate::opnorm::{lower_bound_truncated, star_brackets, TruncationSchedule};
use crate::report::{CheckReport, Row};

/// Exponents `2 <= p <= p'` with `1/p' = alpha/p` and the dual relation
/// `1/q' = (1 - theta) + theta/q`, which forces `theta = alpha`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InterpolationParams {
    pub p: f64,
    #[serde(with = "crate::numfmt::ext")]
    pub p_prime: f64,
    pub q: f64,
    pub q_prime: f64,
    pub alpha: f64,
    pub theta: f64,
}

impl InterpolationParams {
    pub fn new(p: f64, p_prime: f64) -> Result<Self> {
        if !(2.0 <= p && p.is_finite() && p <= p_prime) {
            return Err(LabError::Usage(format!("interpolation needs 2 <= p <= p', got p = {p}, p' = {p_prime}")));
        }
        let alpha = if p_prime.is_infinite() { 0.0 } else { p / p_prime };
        let (q, q_prime) = (conjugate(p), conjugate(p_prime));
        let theta = if q == 1.0 { alpha } else { (1.0 - 1.0 / q_prime) / (1.0 - 1.0 / q) };
        let params = InterpolationParams { p, p_prime, q, q_prime, alpha, theta };
        let rel_a = (1.0 / p_prime - alpha / p).abs();
        let rel_t = (1.0 / q_prime - ((1.0 - theta) + theta / q)).abs();
        if rel_a > 1e-12 || rel_t > 1e-12 || !(0.0..=1.0).contains(&alpha) || !(0.0..=1.0).contains(&theta) {
            return Err(LabError::Consistency(format!("exponent relations fail for {params:?}")));
        }
        Ok(params)
    }

    /// `exp(lambda (1 - alpha) m / q)`.
    pub fn factor(&self, lambda: f64, m: u32) -> f64 {
        (lambda * (1.0 - self.alpha) * m as f64 / self.q).exp()
    }
}

/// `lower(||f||_{B^{p',*}}) <= exp(lambda (1-alpha) m_F / q) upper(||f||_{B^{p,*}})`.
pub fn interpolation_check(
    f: &GroupFunction,
    params: &InterpolationParams,
    growth: &GrowthRate,
    sched: &TruncationSchedule,
) -> Result<CheckReport> {
    let m = f.support_radius();
    let measured = growth.measured_sizes.len().saturating_sub(1);
    if m as usize > measured {
        return Err(LabError::Usage(format!(
            "support radius {m} exceeds the measured growth range {measured}; lambda is not certified there"
        )));
    }
    let bm = growth.measured_sizes[m as usize] as f64;
    if bm > (growth.lambda * m as f64).exp() * (1.0 + 1e-12) {
        return Err(LabError::Consistency(format!("|B_{m}| = {bm} exceeds exp(lambda m) for lambda = {}", growth.lambda)));
    }
    let factor = params.factor(growth.lambda, m);
    let mut both = star_brackets(f, &[params.p_prime, params.p], sched)?;
    let lo = both.pop().expect("two exponents");
    let hi = both.pop().expect("two exponents");
    let best = hi.base.best().max(hi.star.best()) / lo.base.best().max(lo.star.best()).max(f64::MIN_POSITIVE);
    let mut rep = CheckReport::new("interpolation");
    rep.push(Row::sound(f.group().descriptor(), params.p_prime, lo.base.truncation_radius, hi.combined_lower, lo.combined_upper, factor)
        .warn_if(best > factor * (1.0 + 1e-9)));
    rep.set_detail(&json!({
        "f": f.to_record(),
        "params": params,
        "lambda": growth.lambda,
        "support_radius": m,
        "factor": factor,
        "high": hi,
        "low": lo,
        "best_ratio": best,
    }));
    Ok(rep)
}

/// Lower bounds on `||f||_{B(l^p)}` for nonnegative `f` on an amenable group
/// approach `||f||_1`. Every radius must stay below the ceiling; a final
/// ratio under `threshold` warns.
pub fn folner_identity_check(f: &GroupFunction, p: f64, sched: &TruncationSchedule, threshold: f64) -> Result<CheckReport> {
    let g = f.group();
    if !g.is_amenable() {
        return Err(LabError::Usage(format!("{} is not amenable", g.descriptor())));
    }
    if !f.is_nonneg_real() {
        return Err(LabError::Usage("folner identity needs a nonnegative function".into()));
    }
    let est = lower_bound_truncated(f, p, sched)?;
    let l1 = f.l1();
    let mut rep = CheckReport::new("folner");
    if est.profile.is_empty() {
        rep.push(Row::sound(g.descriptor(), p, 0, est.lower, l1, 1.0));
    }
    for step in &est.profile {
        rep.push(Row::sound(g.descriptor(), p, step.radius, step.lower, l1, 1.0));
    }
    let ratio = if l1 > 0.0 { est.lower / l1 } else { 1.0 };
    if ratio < threshold {
        rep.warn(format!("lower bound reaches only {ratio:.6} of the l1 norm"));
    }
    rep.set_detail(&json!({ "f": f.to_record(), "p": p, "l1": l1, "ratio": ratio, "estimate": est }));
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::Group;
    use crate::report::Verdict;

    #[test]
    fn params_relations() {
        let a = InterpolationParams::new(2.0, 4.0).unwrap();
        assert_eq!(a.alpha, 0.5);
        assert!((a.theta - 0.5).abs() < 1e-15);
        let b = InterpolationParams::new(3.0, 3.0).unwrap();
        assert_eq!(b.factor(2.0, 5), 1.0);
        assert!(InterpolationParams::new(1.5, 4.0).is_err());
        assert!(InterpolationParams::new(4.0, 2.0).is_err());
    }

    #[test]
    fn delta_interpolates() {
        let f2 = Group::parse("free:2").unwrap();
        let d = GroupFunction::delta(&f2, &f2.parse_element("aB").unwrap()).unwrap();
        let growth = f2.fit_growth_lambda(4).unwrap();
        let params = InterpolationParams::new(2.0, 4.0).unwrap();
        let r = interpolation_check(&d, &params, &growth, &TruncationSchedule::with_radii(&[0, 1])).unwrap();
        assert_eq!(r.verdict, Verdict::Pass);
        assert!(r.rows[0].factor >= 1.0);
    }

    #[test]
    fn folner_on_z() {
        let z = Group::parse("z").unwrap();
        let d = GroupFunction::delta(&z, &z.parse_element("(3)").unwrap()).unwrap();
        let r = folner_identity_check(&d, 2.0, &TruncationSchedule::with_radii(&[0]), 0.999).unwrap();
        assert_eq!(r.verdict, Verdict::Pass);
        assert_eq!(r.rows[0].lower, 1.0);
    }
}
