//! One planner per registry entry. Planning parses every parameter and
//! builds the groups, so config mistakes surface before any block runs.

use std::path::PathBuf;

use lpconv_core::funcalg::{random_function, RandomMode};
use lpconv_core::group::{BallLimits, EmbeddingKind, SubgroupEmbedding};
use lpconv_core::opnorm::TruncationSchedule;
use lpconv_core::rdlab::{
    amplify_check, duality_check, folner_identity_check, growth_alternative_check, interpolation_check,
    oberlin_search, rd_scan, rd_transfer_check, subgroup_check, tensor_check, Family, GapWitness,
    InterpolationParams, OberlinBudget, TransferOptions,
};
use lpconv_core::report::{CheckReport, Row};
use lpconv_core::sobolev::{
    containment_check, derivation_norm_bounds, flow_consistency_check, idempotent_promote, leibniz_error,
    power_norm_sequence, submult_check, FlowOptions, SobolevParams,
};
use lpconv_core::{par, seed, Group, GroupFunction, GroupSpec, LabError, Result};
use serde_json::{json, Value};

use crate::config::ExperimentSpec;
use crate::error::CliError;
use crate::params::Params;
use crate::registry::{lookup, ExperimentInfo};

/// Per-block state handed to a runner.
pub struct RunCtx {
    pub sched: TruncationSchedule,
    pub seed: u64,
    pub out_dir: PathBuf,
}

impl RunCtx {
    fn sample_seed(&self, i: usize, stream: u64) -> u64 {
        seed::derive(self.seed, &[stream, i as u64])
    }
}

pub struct Outcome {
    pub report: CheckReport,
    /// Per-sample detail objects, in sample order.
    pub samples: Vec<Value>,
    /// Block-level detail shared by all samples.
    pub summary: Value,
    /// Extra files, written as `<prefix>.<suffix>.json`.
    pub artifacts: Vec<(String, Value)>,
}

impl Outcome {
    fn gather(name: &str, reps: Vec<CheckReport>) -> Outcome {
        let mut report = CheckReport::new(name);
        let mut samples = Vec::with_capacity(reps.len());
        for mut r in reps {
            samples.push(std::mem::take(&mut r.detail));
            report.absorb(r);
        }
        Outcome { report, samples, summary: Value::Null, artifacts: Vec::new() }
    }

    fn single(r: CheckReport) -> Outcome {
        Outcome::gather(&r.check.clone(), vec![r])
    }

    fn with_summary(mut self, v: Value) -> Outcome {
        self.summary = v;
        self
    }

    /// Put `pre` (a preparatory scan or search) ahead of this outcome.
    fn after(self, pre: CheckReport) -> Outcome {
        let Outcome { report, samples, summary, artifacts } = self;
        let mut merged = CheckReport::new(&report.check);
        let mut all = vec![pre.detail.clone()];
        merged.absorb(pre);
        merged.absorb(report);
        all.extend(samples);
        Outcome { report: merged, samples: all, summary, artifacts }
    }
}

type Runner = Box<dyn Fn(&RunCtx) -> Result<Outcome> + Send + Sync>;

pub struct Job {
    pub info: &'static ExperimentInfo,
    pub group: Option<Group>,
    run: Runner,
}

impl Job {
    pub fn run(&self, cx: &RunCtx) -> Result<Outcome> {
        (self.run)(cx)
    }
}

/// Samples run through the data-parallel helper; results stay in index order.
fn sampled<F>(n: usize, f: F) -> Result<Vec<CheckReport>>
where
    F: Fn(usize) -> Result<CheckReport> + Sync + Send,
{
    par::map_indexed(n, f).into_iter().collect()
}

fn build_group(s: &str, limits: BallLimits, location: &str) -> std::result::Result<Group, CliError> {
    let spec: GroupSpec = s.parse().map_err(|e: LabError| CliError::parse(location, e.to_string()))?;
    Group::from_spec(&spec, limits).map_err(|e| CliError::parse(location, e.to_string()))
}

pub fn prepare(spec: &ExperimentSpec, location: &str, limits: BallLimits) -> std::result::Result<Job, CliError> {
    let info = lookup(&spec.name)
        .ok_or_else(|| CliError::parse(location, format!("unknown experiment `{}`; see `lpconv list`", spec.name)))?;
    let group = match &spec.group {
        Some(s) => Some(build_group(s, limits, &format!("{location} group"))?),
        None if info.needs_group => return Err(CliError::parse(location, "missing `group`")),
        None => None,
    };
    let p = Params::new(info, &spec.params, location)?;
    let g = group.clone();
    let run = match info.name {
        "amplify" => amplify(&p, g.unwrap())?,
        "containment" => containment(&p, g.unwrap())?,
        "derivation" => derivation(&p, g.unwrap())?,
        "duality" => duality(&p, g.unwrap())?,
        "flow" => flow(&p, g.unwrap())?,
        "folner" => folner(&p, g.unwrap())?,
        "growth" => growth(&p, g.unwrap())?,
        "idempotent" => idempotent(&p, g.unwrap())?,
        "interpolation" => interpolation(&p, g.unwrap())?,
        "oberlin" => oberlin(&p, g)?,
        "powerseq" => powerseq(&p, g.unwrap())?,
        "rd_scan" => rd_scan_plan(&p, g.unwrap())?,
        "rd_transfer" => rd_transfer(&p, g.unwrap())?,
        "subgroup" => subgroup(&p, g.unwrap(), limits)?,
        "submult" => submult(&p, g.unwrap())?,
        "tensor" => tensor(&p, g.unwrap())?,
        other => unreachable!("registry entry {other} has no planner"),
    };
    Ok(Job { info, group, run })
}

type Plan = std::result::Result<Runner, CliError>;

struct Sampling {
    samples: usize,
    radius: usize,
    mode: RandomMode,
    density: f64,
}

impl Sampling {
    fn read(p: &Params) -> std::result::Result<Self, CliError> {
        Ok(Sampling { samples: p.count("samples")?, radius: p.count("radius")?, mode: p.mode("mode")?, density: p.density("density")? })
    }

    fn draw(&self, g: &Group, seed: u64) -> Result<GroupFunction> {
        random_function(g, self.radius, self.mode, self.density, seed)
    }
}

fn duality(p: &Params, g: Group) -> Plan {
    let (exp, tol, s) = (p.exponent("p")?, p.real("tol")?, Sampling::read(p)?);
    Ok(Box::new(move |cx| {
        let reps = sampled(s.samples, |i| duality_check(&s.draw(&g, cx.sample_seed(i, 0))?, exp, &cx.sched, tol))?;
        Ok(Outcome::gather("duality", reps))
    }))
}

fn parse_embedding(s: &str) -> Option<EmbeddingKind> {
    let index = |x: &str| x.trim().parse().ok();
    match s.trim().split_once(':') {
        Some(("free-factor", i)) => Some(EmbeddingKind::FreeFactor { generator: index(i)? }),
        Some(("factor", i)) => Some(EmbeddingKind::Factor { index: index(i)? }),
        None if s.trim() == "padding" => Some(EmbeddingKind::Padding),
        _ => None,
    }
}

fn subgroup(p: &Params, g: Group, limits: BallLimits) -> Plan {
    let (exp, tol, s) = (p.exponent("p")?, p.real("tol")?, Sampling::read(p)?);
    let src = p.text("source").unwrap_or_default();
    let h = build_group(&src, limits, "params.source").map_err(|e| p.err("source", e))?;
    let kind = parse_embedding(&p.text("embedding").unwrap_or_default())
        .ok_or_else(|| p.err("embedding", "expected `free-factor:<i>`, `factor:<i>` or `padding`"))?;
    let emb = SubgroupEmbedding::new(&h, &g, kind).map_err(|e| p.err("embedding", e))?;
    Ok(Box::new(move |cx| {
        let reps = sampled(s.samples, |i| subgroup_check(&s.draw(emb.source(), cx.sample_seed(i, 0))?, &emb, exp, &cx.sched, tol))?;
        Ok(Outcome::gather("subgroup", reps))
    }))
}

fn tensor(p: &Params, g: Group) -> Plan {
    let (exp, tol) = (p.exponent("p")?, p.real("tol")?);
    let (samples, mode, density, radius) = (p.count("samples")?, p.mode("mode")?, p.density("density")?, p.opt_count("radius")?);
    let factors = match g.factors() {
        Some([a, b]) if a.is_finite() && b.is_finite() => (a.clone(), b.clone()),
        _ => return Err(CliError::parse("group", "tensor needs `product:<finite>,<finite>`")),
    };
    Ok(Box::new(move |cx| {
        let (g1, g2) = &factors;
        let r1 = radius.unwrap_or_else(|| g1.diameter().unwrap_or(0));
        let r2 = radius.unwrap_or_else(|| g2.diameter().unwrap_or(0));
        let reps = sampled(samples, |i| {
            let f1 = random_function(g1, r1, mode, density, cx.sample_seed(i, 0))?;
            let f2 = random_function(g2, r2, mode, density, cx.sample_seed(i, 1))?;
            tensor_check(&f1, &f2, exp, &cx.sched, tol)
        })?;
        Ok(Outcome::gather("tensor", reps))
    }))
}

fn budget(p: &Params) -> std::result::Result<OberlinBudget, CliError> {
    Ok(OberlinBudget {
        samples: p.count("samples")?,
        ascent_steps: p.count("ascent_steps")?,
        search_starts: p.count("search_starts")?,
    })
}

fn oberlin(p: &Params, g: Option<Group>) -> Plan {
    let exp = p.exponent("p")?;
    let budget = budget(p)?;
    let mut catalog: Vec<GroupSpec> = p
        .text("catalog")
        .unwrap_or_default()
        .split(';')
        .filter(|s| !s.trim().is_empty())
        .map(|s| s.parse().map_err(|e| p.err("catalog", e)))
        .collect::<std::result::Result<_, _>>()?;
    if let Some(g) = g {
        catalog.retain(|s| s != g.spec());
        catalog.insert(0, g.spec().clone());
    }
    if budget.samples == 0 {
        return Err(p.err("samples", "must be positive"));
    }
    Ok(Box::new(move |cx| {
        let (w, rep) = oberlin_search(&catalog, exp, &budget, &cx.sched)?;
        let witness = serde_json::to_value(&w).expect("witness serializes");
        let mut out = Outcome::single(rep);
        out.artifacts.push(("witness".into(), witness));
        Ok(out)
    }))
}

fn amplify(p: &Params, g: Group) -> Plan {
    let (exp, n, tol) = (p.exponent("p")?, p.count("n")?, p.real("tol")?);
    let budget = budget(p)?;
    let witness = p.text("witness");
    if !g.is_finite() {
        return Err(CliError::parse("group", "amplify needs a finite group"));
    }
    Ok(Box::new(move |cx| {
        let (w, search) = match &witness {
            Some(path) => {
                let path = cx.out_dir.join(path);
                let text = std::fs::read_to_string(&path)
                    .map_err(|e| LabError::Usage(format!("cannot read witness {}: {e}", path.display())))?;
                let w: GapWitness = serde_json::from_str(&text)
                    .map_err(|e| LabError::Usage(format!("bad witness {}: {e}", path.display())))?;
                if &w.group != g.spec() {
                    return Err(LabError::Usage(format!("witness lives on {}, block group is {}", w.group, g.spec())));
                }
                (w, None)
            }
            None => {
                let (w, rep) = oberlin_search(&[g.spec().clone()], exp, &budget, &cx.sched)?;
                (w, Some(rep))
            }
        };
        let out = Outcome::single(amplify_check(&w, n, &cx.sched, tol)?)
            .with_summary(json!({ "witness": w }));
        Ok(match search {
            Some(rep) => out.after(rep),
            None => out,
        })
    }))
}

struct ScanPlan {
    q: f64,
    radii: Vec<usize>,
    families: Vec<Family>,
    samples: usize,
}

impl ScanPlan {
    fn read(p: &Params, q: f64, radii: &str, samples: &str) -> std::result::Result<Self, CliError> {
        Ok(ScanPlan { q, radii: p.counts(radii)?, families: p.families("families")?, samples: p.count(samples)? })
    }

    fn run(&self, g: &Group, sched: &TruncationSchedule) -> Result<(lpconv_core::rdlab::RdFit, CheckReport)> {
        rd_scan(g, self.q, &self.radii, &self.families, self.samples, sched)
    }
}

fn rd_scan_plan(p: &Params, g: Group) -> Plan {
    let scan = ScanPlan::read(p, p.exponent("q")?, "radii", "samples")?;
    Ok(Box::new(move |cx| {
        let (fit, rep) = scan.run(&g, &cx.sched)?;
        Ok(Outcome::single(rep).with_summary(json!({ "fit": fit })))
    }))
}

fn rd_transfer(p: &Params, g: Group) -> Plan {
    let scan = ScanPlan::read(p, p.exponent("q")?, "radii", "samples")?;
    let qp = p.exponent("q_prime")?;
    let opts = TransferOptions {
        samples: p.count("transfer_samples")?,
        slack: p.real("slack")?,
        mode: p.mode("mode")?,
        density: p.density("density")?,
        mazur_pairs: p.count("mazur_pairs")?,
        mazur_radius: p.count("mazur_radius")?,
    };
    Ok(Box::new(move |cx| {
        let (fit, scan_rep) = scan.run(&g, &cx.sched)?;
        let rep = rd_transfer_check(&g, &fit, qp, &opts, &cx.sched)?;
        Ok(Outcome::single(rep).after(scan_rep).with_summary(json!({ "fit": fit })))
    }))
}

fn interpolation(p: &Params, g: Group) -> Plan {
    let params = InterpolationParams::new(p.exponent("p")?, p.exponent("p_prime")?).map_err(|e| p.err("p", e))?;
    let s = Sampling::read(p)?;
    let gr = p.opt_count("growth_radius")?.unwrap_or(s.radius).max(1);
    Ok(Box::new(move |cx| {
        let growth = g.fit_growth_lambda(gr)?;
        let reps = sampled(s.samples, |i| interpolation_check(&s.draw(&g, cx.sample_seed(i, 0))?, &params, &growth, &cx.sched))?;
        Ok(Outcome::gather("interpolation", reps).with_summary(json!({ "params": params, "growth": growth })))
    }))
}

fn folner(p: &Params, g: Group) -> Plan {
    let (f, exp, threshold) = (p.kernel("kernel", &g)?, p.exponent("p")?, p.real("threshold")?);
    Ok(Box::new(move |cx| Ok(Outcome::single(folner_identity_check(&f, exp, &cx.sched, threshold)?))))
}

fn growth(p: &Params, g: Group) -> Plan {
    let (exp, radii) = (p.exponent("p")?, p.counts("radii")?);
    Ok(Box::new(move |_| Ok(Outcome::single(growth_alternative_check(&g, exp, &radii)?))))
}

/// `(C, D)` from the config, or from an (RD) scan run first.
struct FitSource {
    given: Option<(f64, f64)>,
    scan: ScanPlan,
}

impl FitSource {
    fn read(p: &Params, q: f64) -> std::result::Result<Self, CliError> {
        Ok(FitSource { given: p.given_fit()?, scan: ScanPlan::read(p, q, "fit_radii", "fit_samples")? })
    }

    fn resolve(&self, g: &Group, sched: &TruncationSchedule) -> Result<((f64, f64), Option<CheckReport>)> {
        match self.given {
            Some(cd) => Ok((cd, None)),
            None => {
                let (fit, rep) = self.scan.run(g, sched)?;
                Ok(((fit.c_hat, fit.d_hat), Some(rep)))
            }
        }
    }
}

fn prefixed(out: Outcome, pre: Option<CheckReport>) -> Outcome {
    match pre {
        Some(r) => out.after(r),
        None => out,
    }
}

fn containment(p: &Params, g: Group) -> Plan {
    let q = p.exponent("q")?;
    let (fit, s) = (FitSource::read(p, q)?, Sampling::read(p)?);
    Ok(Box::new(move |cx| {
        let ((c, d), scan) = fit.resolve(&g, &cx.sched)?;
        let sp = SobolevParams::new(q, c, d, None)?;
        let reps = sampled(s.samples, |i| containment_check(&s.draw(&g, cx.sample_seed(i, 0))?, &sp, &cx.sched))?;
        Ok(prefixed(Outcome::gather("containment", reps), scan).with_summary(json!({ "params": sp })))
    }))
}

fn submult(p: &Params, g: Group) -> Plan {
    let q = p.exponent("q")?;
    let (fit, s, weight) = (FitSource::read(p, q)?, Sampling::read(p)?, p.opt_real("s")?);
    Ok(Box::new(move |cx| {
        let ((c, d), scan) = fit.resolve(&g, &cx.sched)?;
        let sp = SobolevParams::new(q, c, d, Some(weight.unwrap_or(d + 1.0)))?;
        let reps = sampled(s.samples, |i| {
            let f1 = s.draw(&g, cx.sample_seed(i, 0))?;
            let f2 = s.draw(&g, cx.sample_seed(i, 1))?;
            submult_check(&f1, &f2, sp.t, q, sp.k)
        })?;
        Ok(prefixed(Outcome::gather("submult", reps), scan).with_summary(json!({ "params": sp })))
    }))
}

fn derivation(p: &Params, g: Group) -> Plan {
    let q = p.exponent("q")?;
    let (fit, s) = (FitSource::read(p, q)?, Sampling::read(p)?);
    let k = u32::try_from(p.count("k")?).map_err(|_| p.err("k", "too large"))?;
    let weight = p.real("s")?;
    let (leibniz, leibniz_tol) = (p.count("leibniz_samples")?, p.real("leibniz_tol")?);
    Ok(Box::new(move |cx| {
        let ((c, d), scan) = fit.resolve(&g, &cx.sched)?;
        let sp = SobolevParams::new(q, c, d, None)?;
        let mut reps =
            sampled(s.samples, |i| derivation_norm_bounds(&s.draw(&g, cx.sample_seed(i, 0))?, k, q, weight, sp.k, &cx.sched))?;
        let errs = par::map_indexed(leibniz, |i| -> Result<f64> {
            let f1 = s.draw(&g, cx.sample_seed(i, 1))?;
            let f2 = s.draw(&g, cx.sample_seed(i, 2))?;
            let xi = s.draw(&g, cx.sample_seed(i, 3))?;
            leibniz_error(&f1, &f2, &xi)
        });
        let mut lr = CheckReport::new("leibniz");
        let mut worst = 0.0f64;
        for e in errs {
            let e = e?;
            worst = worst.max(e);
            lr.push(Row::sound(g.descriptor(), q, s.radius, e, leibniz_tol, 1.0).labeled("leibniz"));
        }
        lr.set_detail(&json!({ "max_error": worst, "tolerance": leibniz_tol }));
        reps.push(lr);
        Ok(prefixed(Outcome::gather("derivation", reps), scan).with_summary(json!({ "params": sp })))
    }))
}

fn flow(p: &Params, g: Group) -> Plan {
    let f = p.kernel("kernel", &g)?;
    let (t_values, radius, exp, samples) = (p.reals("t_values")?, p.count("radius")?, p.exponent("p")?, p.count("samples")?);
    Ok(Box::new(move |cx| {
        let opts = FlowOptions { t_values: t_values.clone(), radius, p: exp, samples, seed: cx.seed };
        Ok(Outcome::single(flow_consistency_check(&f, &opts)?))
    }))
}

fn powerseq(p: &Params, g: Group) -> Plan {
    let f = p.kernel("kernel", &g)?;
    let (t, q, n_max, k) = (p.real("t")?, p.exponent("q")?, p.count("n_max")?, p.opt_real("k")?);
    Ok(Box::new(move |cx| Ok(Outcome::single(power_norm_sequence(&f, t, q, n_max, k, &cx.sched)?))))
}

fn idempotent(p: &Params, g: Group) -> Plan {
    let e0 = p.kernel("kernel", &g)?;
    let (tol, max_iter) = (p.real("tol")?, p.count("max_iter")?);
    Ok(Box::new(move |_| Ok(Outcome::single(idempotent_promote(&e0, tol, max_iter)?.1))))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeMap;

    fn spec(name: &str, group: Option<&str>, kv: &[(&str, &str)]) -> ExperimentSpec {
        ExperimentSpec {
            name: name.into(),
            group: group.map(str::to_string),
            params: kv.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect::<BTreeMap<_, _>>(),
            schedule: Default::default(),
            seed: 0,
            output: None,
        }
    }

    fn cx() -> RunCtx {
        RunCtx { sched: TruncationSchedule::with_radii(&[1, 2]).starts(2), seed: 3, out_dir: PathBuf::from(".") }
    }

    #[test]
    fn embeddings() {
        assert_eq!(parse_embedding("factor:1"), Some(EmbeddingKind::Factor { index: 1 }));
        assert_eq!(parse_embedding("padding"), Some(EmbeddingKind::Padding));
        assert_eq!(parse_embedding("free-factor:0"), Some(EmbeddingKind::FreeFactor { generator: 0 }));
        assert_eq!(parse_embedding("pad"), None);
    }

    #[test]
    fn planning_rejects_bad_inputs() {
        let lim = BallLimits::default();
        assert!(prepare(&spec("nope", Some("z"), &[]), "x", lim).is_err());
        assert!(prepare(&spec("duality", None, &[("p", "3")]), "x", lim).is_err());
        assert!(prepare(&spec("duality", Some("sym:0x"), &[("p", "3")]), "x", lim).is_err());
        assert!(prepare(&spec("tensor", Some("z"), &[("p", "3")]), "x", lim).is_err());
        assert!(prepare(&spec("folner", Some("z"), &[("p", "2"), ("kernel", "ball:x")]), "x", lim).is_err());
        assert!(prepare(&spec("oberlin", None, &[]), "x", lim).is_ok());
    }

    #[test]
    fn duality_rows_follow_samples() {
        let job = prepare(&spec("duality", Some("cyclic:12"), &[("p", "3"), ("samples", "5")]), "x", BallLimits::default()).unwrap();
        let out = job.run(&cx()).unwrap();
        assert_eq!(out.report.rows.len(), 5);
        assert_eq!(out.samples.len(), 5);
    }

    #[test]
    fn radius_budget_is_a_resource_error() {
        let lim = BallLimits { max_radius: Some(1), ..Default::default() };
        let job = prepare(&spec("duality", Some("free:2"), &[("p", "3"), ("samples", "1")]), "x", lim).unwrap();
        assert!(matches!(job.run(&cx()), Err(LabError::Resource { .. })));
    }
}
