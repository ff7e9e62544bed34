//! Certified brackets `[lower, upper]` on `||f||_{B(l^p)}`, the norm of
//! `x -> f * x` on `l^p(G)`.
//!
//! * `p = 1, inf`: exactly `||f||_1`.
//! * lower: p-norm power iteration on truncations `B_R -> B_{R+m}`. The image
//!   of a vector supported in `B_R` is computed exactly, so every value is
//!   attained by an actual unit vector.
//! * upper: `min(||f||_1, Riesz-Thorin)` with an l^2 bound from repeated
//!   squaring of `h = f* * f` (and the dense spectral norm on small finite
//!   groups).

mod ascent;
pub mod dense;
mod operator;

use serde::{Deserialize, Serialize};

pub use ascent::{ascend, lp_norm, AscentOptions, AscentResult};
pub use operator::{Scalar, TruncatedOperator, WeightMode};

use crate::error::{usage, LabError, Result};
use crate::funcalg::{GroupFunction, C64};
use crate::{par, seed};

/// Relative slack added to floating-point upper bounds and tolerated when
/// a lower bound exceeds an upper bound by rounding.
pub const SAFETY: f64 = 1e-12;

/// Squarings used for the l^2 bound on finite groups, where supports stay
/// bounded and the bound converges to the exact value.
const FINITE_SQUARINGS: u32 = 48;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruncationSchedule {
    pub radii: Vec<usize>,
    /// Iteration cap per radius and start.
    pub max_iter: usize,
    /// Relative objective change over `window` iterations that stops a run.
    pub tol: f64,
    pub window: usize,
    pub starts: usize,
    pub seed: u64,
    /// Squarings `k` in the l^2 bound on infinite groups.
    pub l2_squarings: u32,
    /// Largest `|supp h|^2` product count allowed for one squaring.
    pub l2_budget: usize,
    pub dense_limit: usize,
}

impl Default for TruncationSchedule {
    fn default() -> Self {
        TruncationSchedule {
            radii: vec![2, 4, 8],
            max_iter: 10_000,
            tol: 1e-8,
            window: 5,
            starts: 16,
            seed: 0,
            l2_squarings: 5,
            l2_budget: 4_000_000,
            dense_limit: dense::DEFAULT_DENSE_LIMIT,
        }
    }
}

impl TruncationSchedule {
    pub fn with_radii(radii: &[usize]) -> Self {
        TruncationSchedule { radii: radii.to_vec(), ..Default::default() }
    }

    pub fn seeded(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn starts(mut self, starts: usize) -> Self {
        self.starts = starts;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.radii.is_empty() {
            return usage("schedule needs at least one radius");
        }
        if self.radii.windows(2).any(|w| w[0] >= w[1]) {
            return usage(format!("schedule radii {:?} are not strictly increasing", self.radii));
        }
        if self.max_iter == 0 || self.starts == 0 || self.window == 0 {
            return usage("schedule caps must be positive");
        }
        if !(self.tol > 0.0) {
            return usage("convergence tolerance must be positive");
        }
        Ok(())
    }

    fn ascent_options(&self) -> AscentOptions {
        AscentOptions { max_iter: self.max_iter, tol: self.tol, window: self.window }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// Endpoint formula `||f||_1`.
    Exact,
    /// l^1 ceiling on the upper side.
    L1,
    /// Power iteration from a positive start on a nonnegative kernel.
    Boyd,
    /// Best of several power iterations from random starts.
    Multistart,
    /// Dense singular values on a small finite group.
    DenseSpectral,
    /// `||h^(2^j)||_1^(1/2^(j+1))` bound on the l^2 norm.
    SpectralSquaring,
    /// Interpolated upper bound between l^1 and the l^2 bound.
    RieszThorin,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadiusStep {
    pub radius: usize,
    /// Best value found at this radius.
    pub value: f64,
    /// Running maximum over radii so far.
    pub lower: f64,
    pub iterations: usize,
    #[serde(with = "crate::numfmt::ext")]
    pub residual: f64,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormEstimate {
    #[serde(with = "crate::numfmt::ext")]
    pub p: f64,
    pub lower: f64,
    pub upper: f64,
    pub method: Vec<Method>,
    pub truncation_radius: usize,
    pub iterations: usize,
    #[serde(with = "crate::numfmt::ext")]
    pub residual: f64,
    pub profile: Vec<RadiusStep>,
    #[serde(with = "crate::numfmt::ext_opt", default)]
    pub l2_upper: Option<f64>,
    pub seed: u64,
}

impl NormEstimate {
    fn exact(p: f64, value: f64) -> Self {
        NormEstimate {
            p,
            lower: value,
            upper: value,
            method: vec![Method::Exact],
            truncation_radius: 0,
            iterations: 0,
            residual: 0.0,
            profile: Vec::new(),
            l2_upper: None,
            seed: 0,
        }
    }

    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }

    /// Best single estimate: the attained lower value.
    pub fn best(&self) -> f64 {
        self.lower
    }

    pub fn overlaps(&self, other: &NormEstimate) -> bool {
        self.lower <= other.upper * (1.0 + SAFETY) && other.lower <= self.upper * (1.0 + SAFETY)
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lower <= x * (1.0 + SAFETY) && x <= self.upper * (1.0 + SAFETY)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StarNormEstimate {
    pub base: NormEstimate,
    pub star: NormEstimate,
    pub combined_lower: f64,
    pub combined_upper: f64,
}

fn check_p(p: f64) -> Result<()> {
    if p.is_nan() || p < 1.0 {
        return Err(LabError::Parse(format!("exponent {p} outside [1, inf]")));
    }
    Ok(())
}

fn is_endpoint(p: f64) -> bool {
    p == 1.0 || p.is_infinite()
}

/// `||f||_{B(l^1)} = ||f||_{B(l^inf)} = ||f||_1`.
pub fn exact_norm_p1_pinf(f: &GroupFunction) -> f64 {
    f.l1()
}

/// Radii actually used: on a finite group radii beyond the diameter are
/// collapsed onto it.
fn effective_radii(f: &GroupFunction, radii: &[usize]) -> Vec<usize> {
    match f.group().diameter() {
        Some(d) => {
            let mut out: Vec<usize> = radii.iter().map(|&r| r.min(d)).collect();
            out.dedup();
            out
        }
        None => radii.to_vec(),
    }
}

/// Output of a truncated lower-bound sweep.
#[derive(Debug, Clone)]
pub struct LowerSweep {
    pub value: f64,
    pub profile: Vec<RadiusStep>,
    pub iterations: usize,
    pub residual: f64,
    pub boyd: bool,
}

fn pad<T: Scalar>(mut x: Vec<T>, n: usize, positive: bool) -> Vec<T> {
    let fill = if positive {
        let m = x.iter().map(|v| v.modulus()).filter(|&a| a > 0.0).fold(f64::INFINITY, f64::min);
        T::one().scale(if m.is_finite() { 0.5 * m } else { 1.0 })
    } else {
        T::default()
    };
    x.resize(n, fill);
    x
}

/// Iterations every start gets before the weaker ones are dropped.
const SCREEN_ITERS: usize = 25;

/// Run all starts for a short probe, then continue the best quarter to
/// convergence. Every iterate is a valid lower bound, so dropping a start
/// can only cost tightness.
fn screened<T: Scalar>(op: &TruncatedOperator<T>, p: f64, starts: &[Vec<T>], opts: &AscentOptions) -> Vec<AscentResult<T>> {
    let probe = AscentOptions { max_iter: opts.max_iter.min(SCREEN_ITERS), ..*opts };
    let first = par::map_indexed(starts.len(), |i| ascend(op, p, starts[i].clone(), &probe));
    let mut order: Vec<usize> = (0..first.len()).collect();
    order.sort_by(|&a, &b| first[b].value.total_cmp(&first[a].value).then(a.cmp(&b)));
    order.truncate(starts.len().div_ceil(4));
    let rest = AscentOptions { max_iter: opts.max_iter.saturating_sub(probe.max_iter).max(1), ..*opts };
    par::map_indexed(order.len(), |j| {
        let r = &first[order[j]];
        if r.converged {
            return r.clone();
        }
        let mut c = ascend(op, p, r.x.clone(), &rest);
        c.iterations += r.iterations;
        if c.value < r.value {
            c.value = r.value;
            c.x.clone_from(&r.x);
        }
        c
    })
}

fn sweep<T: Scalar>(
    f: &GroupFunction,
    p: f64,
    mode: WeightMode,
    radii: &[usize],
    sched: &TruncationSchedule,
    boyd: bool,
) -> Result<LowerSweep> {
    let opts = sched.ascent_options();
    let mut warm: Option<Vec<T>> = None;
    let mut out = LowerSweep { value: 0.0, profile: Vec::new(), iterations: 0, residual: 0.0, boyd };
    for (ri, &r) in radii.iter().enumerate() {
        let op = TruncatedOperator::<T>::new(f, r, mode)?;
        let n = op.ncols();
        let mut starts: Vec<Vec<T>> = Vec::new();
        if let Some(w) = warm.take() {
            starts.push(pad(w, n, boyd));
        }
        if boyd {
            if starts.is_empty() {
                starts.push(vec![T::one(); n]);
            }
        } else {
            while starts.len() < sched.starts {
                let mut rng = seed::rng(seed::derive(sched.seed, &[ri as u64, starts.len() as u64]));
                starts.push((0..n).map(|_| T::random(&mut rng)).collect());
            }
        }
        let results = if starts.len() > 1 {
            screened(&op, p, &starts, &opts)
        } else {
            vec![ascend(&op, p, starts.pop().expect("one start"), &opts)]
        };
        let best = results
            .into_iter()
            .reduce(|a, b| if b.value > a.value { b } else { a })
            .expect("at least one start");
        out.value = out.value.max(best.value);
        out.iterations += best.iterations;
        out.residual = best.residual;
        out.profile.push(RadiusStep {
            radius: r,
            value: best.value,
            lower: out.value,
            iterations: best.iterations,
            residual: best.residual,
            converged: best.converged,
        });
        log::debug!("radius {r}: value {:.12} after {} iterations", best.value, best.iterations);
        warm = Some(best.x);
    }
    Ok(out)
}

/// Lower bound on the norm of the weighted kernel `f(g h^-1) w(g, h)` by a
/// truncated sweep; nonnegative plain kernels use a single positive start.
pub fn operator_lower_bound(
    f: &GroupFunction,
    p: f64,
    mode: WeightMode,
    sched: &TruncationSchedule,
) -> Result<LowerSweep> {
    check_p(p)?;
    if !(p > 1.0 && p.is_finite()) {
        return usage("truncated iterations need 1 < p < inf");
    }
    sched.validate()?;
    let radii = effective_radii(f, &sched.radii);
    if f.is_zero() {
        return Ok(LowerSweep { value: 0.0, profile: Vec::new(), iterations: 0, residual: 0.0, boyd: false });
    }
    match mode {
        WeightMode::Flow { .. } => sweep::<C64>(f, p, mode, &radii, sched, false),
        _ if f.is_real() => {
            let boyd = matches!(mode, WeightMode::Plain) && f.is_nonneg_real();
            sweep::<f64>(f, p, mode, &radii, sched, boyd)
        }
        _ => sweep::<C64>(f, p, mode, &radii, sched, false),
    }
}

fn from_sweep(p: f64, sweep: LowerSweep, upper: f64, sched: &TruncationSchedule) -> NormEstimate {
    NormEstimate {
        p,
        lower: sweep.value,
        upper,
        method: vec![if sweep.boyd { Method::Boyd } else { Method::Multistart }],
        truncation_radius: sweep.profile.last().map_or(0, |s| s.radius),
        iterations: sweep.iterations,
        residual: sweep.residual,
        profile: sweep.profile,
        l2_upper: None,
        seed: sched.seed,
    }
}

/// Truncated lower bound; the upper side is only the l^1 ceiling.
pub fn lower_bound_truncated(f: &GroupFunction, p: f64, sched: &TruncationSchedule) -> Result<NormEstimate> {
    let s = operator_lower_bound(f, p, WeightMode::Plain, sched)?;
    let l1 = f.l1();
    let mut est = from_sweep(p, s, l1, sched);
    est.method.push(Method::L1);
    clamp(&mut est, f)?;
    Ok(est)
}

/// Boyd's iteration on `B_R -> B_{R+m}` for a nonnegative kernel.
pub fn boyd_pnorm(f: &GroupFunction, p: f64, radius: usize) -> Result<NormEstimate> {
    if !f.is_nonneg_real() {
        return usage("boyd_pnorm needs a nonnegative real kernel");
    }
    let sched = TruncationSchedule::with_radii(&[radius]);
    lower_bound_truncated(f, p, &sched)
}

/// Certified upper bound on `||f||_{B(l^2)}`: the best of
/// `||h^(2^j)||_1^(1/2^(j+1))`, `h = f* * f`, over the squarings that fit the
/// budget, and the dense spectral norm when the group is small enough.
pub fn l2_upper(f: &GroupFunction, sched: &TruncationSchedule) -> f64 {
    if f.is_zero() {
        return 0.0;
    }
    let squarings = if f.group().is_finite() { FINITE_SQUARINGS.max(sched.l2_squarings) } else { sched.l2_squarings };
    let mut best = squaring_bound(f, squarings, sched.l2_budget) * (1.0 + SAFETY);
    if let Ok(s) = dense::spectral_norm(f, sched.dense_limit) {
        best = best.min(s * (1.0 + SAFETY));
    }
    best.min(f.l1())
}

fn squaring_bound(f: &GroupFunction, squarings: u32, budget: usize) -> f64 {
    let mut h = f.involution().convolve_unchecked(f);
    let n0 = h.l1();
    if n0 == 0.0 {
        return 0.0;
    }
    h = h.scale(C64::new(1.0 / n0, 0.0));
    let mut log_norm = n0.ln();
    let mut best = (log_norm / 2.0).exp();
    for j in 1..=squarings {
        if h.is_nonneg_real() {
            // ||h^(2^j)||_1 = ||h||_1^(2^j) from here on
            break;
        }
        if h.support_len().saturating_mul(h.support_len()) > budget {
            break;
        }
        h = h.convolve_unchecked(&h);
        let n = h.l1();
        if n == 0.0 {
            return 0.0;
        }
        h = h.scale(C64::new(1.0 / n, 0.0));
        log_norm = 2.0 * log_norm + n.ln();
        best = best.min((log_norm / 2f64.powi(j as i32 + 1)).exp());
    }
    best
}

/// `min(||f||_1, Riesz-Thorin(||f||_1, U_2))`; `aux` is a precomputed l^2
/// upper bound (computed with the default schedule when absent).
pub fn upper_bound(f: &GroupFunction, p: f64, aux: Option<f64>) -> f64 {
    let l1 = f.l1();
    if is_endpoint(p) || l1 == 0.0 {
        return l1;
    }
    let u2 = aux.unwrap_or_else(|| l2_upper(f, &TruncationSchedule::default()));
    let rt = if p < 2.0 {
        l1.powf(2.0 / p - 1.0) * u2.powf(2.0 - 2.0 / p)
    } else if p > 2.0 {
        l1.powf(1.0 - 2.0 / p) * u2.powf(2.0 / p)
    } else {
        u2
    };
    l1.min(rt * (1.0 + SAFETY))
}

fn clamp(est: &mut NormEstimate, f: &GroupFunction) -> Result<()> {
    if est.lower > est.upper {
        if est.lower <= est.upper * (1.0 + SAFETY) + f64::MIN_POSITIVE {
            est.lower = est.upper;
        } else {
            return Err(LabError::Consistency(format!(
                "lower {} exceeds upper {} for p = {} on {} (support {}, methods {:?}, radius {})",
                est.lower,
                est.upper,
                est.p,
                f.group().descriptor(),
                f.support_len(),
                est.method,
                est.truncation_radius
            )));
        }
    }
    Ok(())
}

/// Full bracket: best lower bound and the interpolated upper bound.
pub fn bracket(f: &GroupFunction, p: f64, sched: &TruncationSchedule) -> Result<NormEstimate> {
    bracket_with_l2(f, p, sched, None)
}

/// [`bracket`] reusing a precomputed `l2_upper(f, sched)`.
pub fn bracket_with_l2(f: &GroupFunction, p: f64, sched: &TruncationSchedule, l2: Option<f64>) -> Result<NormEstimate> {
    check_p(p)?;
    sched.validate()?;
    if is_endpoint(p) || f.is_zero() {
        let mut e = NormEstimate::exact(p, exact_norm_p1_pinf(f));
        e.seed = sched.seed;
        return Ok(e);
    }
    let sweep = operator_lower_bound(f, p, WeightMode::Plain, sched)?;
    let u2 = l2.unwrap_or_else(|| l2_upper(f, sched));
    let upper = upper_bound(f, p, Some(u2));
    let mut est = from_sweep(p, sweep, upper, sched);
    let dense = dense::spectral_norm(f, sched.dense_limit).ok();
    if p == 2.0 {
        if let Some(s) = dense {
            est.lower = est.lower.max(s * (1.0 - SAFETY));
            est.method.push(Method::DenseSpectral);
        }
    }
    est.method.push(if upper == f.l1() {
        Method::L1
    } else if p == 2.0 {
        if dense.is_some() {
            Method::DenseSpectral
        } else {
            Method::SpectralSquaring
        }
    } else {
        Method::RieszThorin
    });
    est.method.dedup();
    est.l2_upper = Some(u2);
    clamp(&mut est, f)?;
    Ok(est)
}

/// Brackets for `f` and `f*` at the same `p` and seed, and their max.
pub fn star_bracket(f: &GroupFunction, p: f64, sched: &TruncationSchedule) -> Result<StarNormEstimate> {
    Ok(star_brackets(f, &[p], sched)?.pop().expect("one exponent"))
}

/// [`star_bracket`] at several exponents, sharing the l^2 bounds.
pub fn star_brackets(f: &GroupFunction, ps: &[f64], sched: &TruncationSchedule) -> Result<Vec<StarNormEstimate>> {
    let fs = f.involution();
    let needs_l2 = ps.iter().any(|&p| !is_endpoint(p)) && !f.is_zero();
    let (u, us) = if needs_l2 { (Some(l2_upper(f, sched)), Some(l2_upper(&fs, sched))) } else { (None, None) };
    ps.iter()
        .map(|&p| {
            let base = bracket_with_l2(f, p, sched, u)?;
            let star = bracket_with_l2(&fs, p, sched, us)?;
            Ok(StarNormEstimate {
                combined_lower: base.lower.max(star.lower),
                combined_upper: base.upper.max(star.upper),
                base,
                star,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::funcalg::{random_function, RandomMode};
    use crate::group::Group;

    #[test]
    fn endpoints_are_l1() {
        let f2 = Group::parse("free:2").unwrap();
        let f = GroupFunction::from_entries(
            &f2,
            [(f2.identity().clone(), C64::new(2.0, 0.0)), (f2.parse_element("a").unwrap(), C64::new(0.0, 1.0))],
        )
        .unwrap();
        for p in [1.0, f64::INFINITY] {
            let b = bracket(&f, p, &TruncationSchedule::default()).unwrap();
            assert_eq!((b.lower, b.upper), (3.0, 3.0));
        }
    }

    #[test]
    fn delta_brackets_are_one() {
        let f2 = Group::parse("free:2").unwrap();
        let g = f2.parse_element("abA").unwrap();
        let d = GroupFunction::delta(&f2, &g).unwrap();
        for p in [1.5, 2.0, 3.0] {
            let b = bracket(&d, p, &TruncationSchedule::with_radii(&[0, 1])).unwrap();
            assert!((b.lower - 1.0).abs() < 1e-12 && (b.upper - 1.0).abs() < 1e-9, "{b:?}");
            assert_eq!(b.profile[0].value, 1.0);
        }
    }

    #[test]
    fn l2_bound_examples() {
        let z = Group::parse("z").unwrap();
        let pts = [z.parse_element("(0)").unwrap(), z.parse_element("(1)").unwrap()];
        let f = GroupFunction::indicator(&z, &pts).unwrap();
        let mut sched = TruncationSchedule::default();
        sched.l2_squarings = 6;
        let u = l2_upper(&f, &sched);
        assert!((2.0..=2.2).contains(&u), "{u}");
        let f2 = Group::parse("free:2").unwrap();
        let s = GroupFunction::sphere_indicator(&f2, 1).unwrap();
        let u = l2_upper(&s, &TruncationSchedule::default());
        assert!(u >= 2.0 * 3f64.sqrt() && u <= 4.05, "{u}");
    }

    #[test]
    fn lower_is_monotone_in_radius() {
        let f2 = Group::parse("free:2").unwrap();
        let f = random_function(&f2, 1, RandomMode::Complex, 1.0, 11).unwrap();
        let sched = TruncationSchedule::with_radii(&[0, 1, 2, 3]).starts(4);
        let e = lower_bound_truncated(&f, 3.0, &sched).unwrap();
        for w in e.profile.windows(2) {
            assert!(w[0].lower <= w[1].lower + 1e-12);
        }
    }

    #[test]
    fn star_combines_by_max() {
        let f2 = Group::parse("free:2").unwrap();
        let f = random_function(&f2, 2, RandomMode::Complex, 1.0, 2).unwrap();
        let s = star_bracket(&f, 4.0, &TruncationSchedule::with_radii(&[1, 2]).starts(3)).unwrap();
        assert_eq!(s.combined_lower, s.base.lower.max(s.star.lower));
        assert_eq!(s.combined_upper, s.base.upper.max(s.star.upper));
    }

    #[test]
    fn estimate_json_round_trip() {
        let z = Group::parse("z").unwrap();
        let e = bracket(&GroupFunction::identity(&z), f64::INFINITY, &TruncationSchedule::default()).unwrap();
        let s = serde_json::to_string(&e).unwrap();
        assert!(s.contains("\"p\":\"inf\""));
        let back: NormEstimate = serde_json::from_str(&s).unwrap();
        assert_eq!(back, e);
    }

    #[test]
    fn bad_schedules_rejected() {
        assert!(TruncationSchedule::with_radii(&[2, 2]).validate().is_err());
        assert!(TruncationSchedule::with_radii(&[]).validate().is_err());
        let z = Group::parse("z").unwrap();
        assert!(bracket(&GroupFunction::identity(&z), 0.5, &TruncationSchedule::default()).is_err());
    }
}
