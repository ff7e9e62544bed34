//! Acceptance suite. Every criterion runs in order inside one test and
//! prints one PASS/FAIL line to stderr; the test fails if any line fails.
//! Oracles here are written against the group API only, not the estimators.

use std::io::Write;
use std::path::Path;
use std::time::{Duration, Instant};

use lpconv::{run, Config, RunOptions};
use lpconv_core::funcalg::{random_function, RandomMode};
use lpconv_core::opnorm::{bracket, lower_bound_truncated, TruncationSchedule};
use lpconv_core::rdlab::{
    duality_check, folner_identity_check, gap_witness, interpolation_check, mazur_chain, rd_scan, rd_transfer_check,
    tensor_check, Family, GapWitness, InterpolationParams, TransferOptions,
};
use lpconv_core::report::{CheckReport, Verdict};
use lpconv_core::sobolev::{
    containment_check, derivation_norm_bounds, flow_consistency_check, idempotent_promote, leibniz_error,
    power_norm_sequence, submult_check, FlowOptions, SobolevParams,
};
use lpconv_core::{par, seed, Element, Group, GroupFunction, C64};
use nalgebra::DMatrix;
use rand::Rng;

struct Outcome {
    ok: bool,
    detail: String,
}

fn outcome(ok: bool, detail: impl Into<String>) -> Outcome {
    Outcome { ok, detail: detail.into() }
}

fn no_fail(r: &CheckReport) -> bool {
    r.rows.iter().all(|row| row.verdict != Verdict::Fail) && r.verdict != Verdict::Fail
}

fn fails(reps: &[CheckReport]) -> usize {
    reps.iter().map(|r| r.count(Verdict::Fail) + usize::from(r.rows.is_empty() && r.verdict == Verdict::Fail)).sum()
}

// ---- oracles ----

fn elements(g: &Group) -> Vec<Element> {
    g.ball(g.diameter().expect("finite group")).unwrap()
}

/// `M[i][j] = f(g_i g_j^-1)` over the whole finite group.
fn dense(f: &GroupFunction) -> DMatrix<C64> {
    let g = f.group();
    let els = elements(g);
    let n = els.len();
    let mut m = DMatrix::zeros(n, n);
    for (i, a) in els.iter().enumerate() {
        for (j, b) in els.iter().enumerate() {
            let x = g.multiply(a, &g.invert(b).unwrap()).unwrap();
            m[(i, j)] = f.get(&x);
        }
    }
    m
}

fn spectral(m: &DMatrix<C64>) -> f64 {
    m.clone().singular_values().max()
}

fn lp(v: &[f64], p: f64) -> f64 {
    v.iter().map(|x| x.abs().powf(p)).sum::<f64>().powf(1.0 / p)
}

/// Multi-start nonlinear power method on a dense nonnegative matrix.
fn dense_pnorm(m: &DMatrix<f64>, p: f64, starts: usize, seed: u64) -> f64 {
    let q = p / (p - 1.0);
    let n = m.ncols();
    let mut rng = lpconv_core::seed::rng(seed);
    let mut best = 0.0f64;
    for s in 0..starts {
        let mut x: Vec<f64> = (0..n).map(|_| if s == 0 { 1.0 } else { rng.gen::<f64>() + 1e-3 }).collect();
        for _ in 0..3000 {
            let nx = lp(&x, p);
            x.iter_mut().for_each(|v| *v /= nx);
            let y: Vec<f64> = (0..m.nrows()).map(|i| (0..n).map(|j| m[(i, j)] * x[j]).sum()).collect();
            best = best.max(lp(&y, p));
            let d: Vec<f64> = y.iter().map(|v| v.abs().powf(p - 1.0) * v.signum()).collect();
            let z: Vec<f64> = (0..n).map(|j| (0..m.nrows()).map(|i| m[(i, j)] * d[i]).sum()).collect();
            x = z.iter().map(|v| v.abs().powf(q - 1.0) * v.signum()).collect();
            if x.iter().all(|v| *v == 0.0) {
                break;
            }
        }
    }
    best
}

fn real_part(m: &DMatrix<C64>) -> DMatrix<f64> {
    m.map(|c| c.re)
}

/// Radial reduction of the truncated operator `B_R -> B_{R+1}` for the
/// generator indicator on the free group of rank `k`, in l^2-normalized
/// sphere coordinates; square root of the top eigenvalue of `B^T B`.
fn kesten_radial(k: usize, r: usize) -> f64 {
    let deg = 2 * k;
    let sphere = |n: usize| if n == 0 { 1.0 } else { deg as f64 * ((deg - 1) as f64).powi(n as i32 - 1) };
    let rows = r + 2;
    let cols = r + 1;
    // (A x)_n = sum_m c(n, m) x_m, c(n, m) = neighbours on S_m of one point of S_n.
    let mut c = DMatrix::<f64>::zeros(rows, cols);
    for n in 0..rows {
        for m in 0..cols {
            c[(n, m)] = match (n, m) {
                (0, 1) => deg as f64,
                (n, m) if n >= 1 && m + 1 == n => 1.0,
                (n, m) if n >= 1 && m == n + 1 => (deg - 1) as f64,
                _ => 0.0,
            };
        }
    }
    let b = DMatrix::from_fn(rows, cols, |n, m| sphere(n).sqrt() * c[(n, m)] / sphere(m).sqrt());
    let btb = b.transpose() * &b;
    btb.symmetric_eigenvalues().max().sqrt()
}

fn fourier_z(f: &GroupFunction, theta: f64) -> C64 {
    f.entries().map(|(g, v)| v * C64::from_polar(1.0, -theta * g.form()[0] as f64)).sum()
}

fn weighted_norm(f: &GroupFunction, s: f64, q: f64) -> f64 {
    let g = f.group();
    f.entries().map(|(h, v)| ((1.0 + g.length(h) as f64).powf(s) * v.norm()).powf(q)).sum::<f64>().powf(1.0 / q)
}

// ---- criteria ----

fn kesten() -> Outcome {
    let f2 = Group::parse("free:2").unwrap();
    let f = GroupFunction::sphere_indicator(&f2, 1).unwrap();
    par::set_sequential(true);
    let t = Instant::now();
    let est = lower_bound_truncated(&f, 2.0, &TruncationSchedule::with_radii(&[12]));
    let secs = t.elapsed().as_secs_f64();
    par::set_sequential(false);
    let est = est.unwrap();
    let target = 0.98 * 2.0 * 3f64.sqrt();
    let oracle = kesten_radial(2, 12);
    let ok = est.lower >= target
        && secs < 60.0
        && est.lower <= oracle * (1.0 + 1e-9)
        && (oracle - est.lower) <= 1e-4 * oracle
        && oracle <= 2.0 * 3f64.sqrt();
    outcome(
        ok,
        format!("lower {:.6} >= {target:.6}, radial oracle {oracle:.6}, closed form {:.6}, {secs:.1} s single-threaded", est.lower, 2.0 * 3f64.sqrt()),
    )
}

const FAMILIES: [&str; 10] =
    ["free:2", "free:3", "zd:2", "z", "heisenberg", "cyclic:12", "sym:3", "alt:4", "q8", "product:sym:3,cyclic:4"];

fn endpoints() -> Outcome {
    let sched = TruncationSchedule::with_radii(&[2]);
    let mut worst = 0.0f64;
    let mut bad = 0;
    for i in 0..200 {
        let g = Group::parse(FAMILIES[i % FAMILIES.len()]).unwrap();
        let f = random_function(&g, 2, RandomMode::Complex, 0.7, seed::derive(2, &[i as u64])).unwrap();
        let l1: f64 = f.entries().map(|(_, v)| v.norm()).sum();
        for p in [1.0, f64::INFINITY] {
            let b = bracket(&f, p, &sched).unwrap();
            let err = (b.lower - l1).abs() / l1;
            worst = worst.max(err);
            if b.lower != b.upper || err > 4.0 * f64::EPSILON {
                bad += 1;
            }
        }
    }
    outcome(bad == 0, format!("400 brackets, {bad} off; worst relative error {worst:.1e} vs direct l1 sums"))
}

const SMALL: [&str; 8] =
    ["cyclic:12", "sym:3", "dihedral:4", "q8", "alt:4", "sym:4", "dihedral:6", "product:cyclic:2,cyclic:3"];

fn finite_oracles() -> Outcome {
    let sched = TruncationSchedule::default().starts(8);
    let (mut width_bad, mut worst_width) = (0, 0.0f64);
    for i in 0..50 {
        let g = Group::parse(SMALL[i % SMALL.len()]).unwrap();
        assert!(g.order().unwrap() <= 24);
        let f = random_function(&g, g.diameter().unwrap(), RandomMode::Complex, 0.8, seed::derive(3, &[i as u64])).unwrap();
        let b = bracket(&f, 2.0, &sched).unwrap();
        let o = spectral(&dense(&f));
        worst_width = worst_width.max(b.upper - b.lower);
        if !(b.upper - b.lower < 1e-6 && b.lower <= o * (1.0 + 1e-12) && o <= b.upper * (1.0 + 1e-12)) {
            width_bad += 1;
        }
    }
    let (mut boyd_bad, mut worst_rel) = (0, 0.0f64);
    for i in 0..24 {
        let g = Group::parse(SMALL[i % SMALL.len()]).unwrap();
        let p = [1.5, 3.0, 4.0][i % 3];
        let f = random_function(&g, g.diameter().unwrap(), RandomMode::NonNeg, 0.8, seed::derive(31, &[i as u64])).unwrap();
        let est = lower_bound_truncated(&f, p, &TruncationSchedule::with_radii(&[g.diameter().unwrap()])).unwrap();
        let o = dense_pnorm(&real_part(&dense(&f)), p, 6, i as u64);
        let rel = (est.lower - o).abs() / o;
        worst_rel = worst_rel.max(rel);
        if rel > 1e-4 {
            boyd_bad += 1;
        }
    }
    outcome(
        width_bad == 0 && boyd_bad == 0,
        format!(
            "p=2: {width_bad}/50 outside, widest {worst_width:.1e} (SVD oracle); Boyd p in {{1.5,3,4}}: {boyd_bad}/24 off, worst {worst_rel:.1e} (multistart oracle)"
        ),
    )
}

fn duality() -> Outcome {
    let f2 = Group::parse("free:2").unwrap();
    let mut exact_bad = 0;
    for i in 0..20 {
        let f = random_function(&f2, 2, RandomMode::Complex, 1.0, seed::derive(4, &[0, i])).unwrap();
        for p in [1.0, f64::INFINITY] {
            if duality_check(&f, p, &TruncationSchedule::with_radii(&[2]), 0.0).unwrap().verdict != Verdict::Pass {
                exact_bad += 1;
            }
        }
    }
    let sched = TruncationSchedule::with_radii(&[2, 4, 8]).starts(16).seeded(4);
    let t = Instant::now();
    let reps: Vec<CheckReport> = (0..20)
        .map(|i| {
            let f = random_function(&f2, 2, RandomMode::Complex, 1.0, seed::derive(4, &[1, i])).unwrap();
            duality_check(&f, 3.0, &sched, 1e-6).unwrap()
        })
        .collect();
    let unsound = fails(&reps);
    let overlap = reps.iter().filter(|r| r.notes.is_empty()).count();
    outcome(
        exact_bad == 0 && unsound == 0 && overlap == 20,
        format!("endpoints {exact_bad}/40 inexact; p=3 R=8: {overlap}/20 brackets overlap, {unsound} unsound, {:.0} s", t.elapsed().as_secs_f64()),
    )
}

fn kron(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    a.kronecker(b)
}

fn tensor() -> Outcome {
    let s3 = Group::parse("sym:3").unwrap();
    let z4 = Group::parse("cyclic:4").unwrap();
    let sched = TruncationSchedule::default().starts(8);
    let (mut worst_nn, mut worst_oracle, mut worst_signed, mut unsound) = (0.0f64, 0.0f64, 0.0f64, 0);
    for i in 0..10u64 {
        let a = random_function(&s3, 3, RandomMode::NonNeg, 1.0, seed::derive(5, &[0, i])).unwrap();
        let b = random_function(&s3, 3, RandomMode::NonNeg, 1.0, seed::derive(5, &[1, i])).unwrap();
        let r = tensor_check(&a, &b, 4.0, &sched, 1e-6).unwrap();
        unsound += r.count(Verdict::Fail);
        worst_nn = worst_nn.max(r.detail["relative_error"].as_f64().unwrap());
        let (da, db) = (real_part(&dense(&a)), real_part(&dense(&b)));
        let whole = dense_pnorm(&kron(&da, &db), 4.0, 2, i);
        let parts = dense_pnorm(&da, 4.0, 2, i) * dense_pnorm(&db, 4.0, 2, i);
        worst_oracle = worst_oracle.max((whole - parts).abs() / parts);
        let a = random_function(&z4, 2, RandomMode::Real, 1.0, seed::derive(5, &[2, i])).unwrap();
        let b = random_function(&z4, 2, RandomMode::Real, 1.0, seed::derive(5, &[3, i])).unwrap();
        let r = tensor_check(&a, &b, 3.0, &sched, 0.02).unwrap();
        unsound += r.count(Verdict::Fail);
        worst_signed = worst_signed.max(r.detail["relative_error"].as_f64().unwrap());
    }
    outcome(
        worst_nn < 1e-6 && worst_signed < 0.02 && worst_oracle < 1e-6 && unsound == 0,
        format!("S3xS3 p=4 nonneg {worst_nn:.1e} (dense Kronecker oracle {worst_oracle:.1e}); Z4xZ4 p=3 signed {worst_signed:.1e}; {unsound} unsound"),
    )
}

fn abelian_gap(dir: &Path) -> Outcome {
    let sched = TruncationSchedule::default().starts(4);
    let mut worst = 0.0f64;
    for (k, spec) in ["cyclic:12", "product:cyclic:5,cyclic:5"].iter().enumerate() {
        let g = Group::parse(spec).unwrap();
        for i in 0..50u64 {
            let f = random_function(&g, g.diameter().unwrap(), RandomMode::Complex, 0.8, seed::derive(6, &[k as u64, i])).unwrap();
            worst = worst.max(gap_witness(&f, 4.0, &sched).unwrap().gap_lower);
        }
    }
    let t = Instant::now();
    let cfg = Config::parse("[[experiment]]\nname = \"oberlin\"\nseed = 6\nparams = { p = \"4\" }\n", "oberlin").unwrap();
    let opts = RunOptions { out_dir: dir.to_path_buf(), ..Default::default() };
    let summary = run(&cfg, Path::new("oberlin.toml"), &opts).unwrap();
    let secs = t.elapsed();
    let text = std::fs::read_to_string(dir.join("oberlin.witness.json")).unwrap();
    let w: GapWitness = serde_json::from_str(&text).unwrap();
    let sound = w.gap_lower >= 0.0
        && w.estimate.base.lower <= w.estimate.base.upper
        && w.estimate.star.lower <= w.estimate.star.upper
        && summary.verdict != Verdict::Fail;
    outcome(
        worst < 1e-6 && sound && secs < Duration::from_secs(600),
        format!(
            "abelian gap_lower max {worst:.1e} over 100 f; catalog search {:.1} s, witness on {} with gap_lower {:.2e}, best-estimate gap {:.3}",
            secs.as_secs_f64(),
            w.group,
            w.gap_lower,
            w.gap_best
        ),
    )
}

fn interpolation() -> Outcome {
    let f2 = Group::parse("free:2").unwrap();
    let growth = f2.fit_growth_lambda(3).unwrap();
    let sup = (1..=3).map(|m| (growth.measured_sizes[m] as f64).ln() / m as f64).fold(0.0, f64::max);
    let params = InterpolationParams::new(2.0, 4.0).unwrap();
    let sched = TruncationSchedule::with_radii(&[2]).starts(4).seeded(7);
    let reps: Vec<CheckReport> = (0..100)
        .map(|i| {
            let f = random_function(&f2, 3, RandomMode::Complex, 0.5, seed::derive(7, &[i])).unwrap();
            interpolation_check(&f, &params, &growth, &sched).unwrap()
        })
        .collect();
    let unsound = fails(&reps);
    outcome(
        unsound == 0 && growth.lambda >= sup - 1e-12,
        format!("{unsound}/100 violations; lambda {:.6} covers sup_m ln|B_m|/m = {sup:.6}", growth.lambda),
    )
}

fn rd_suite() -> Outcome {
    let z2 = Group::parse("zd:2").unwrap();
    let radii: Vec<usize> = (0..=6).collect();
    let fams = [Family::Spheres, Family::Balls, Family::RandomNonneg];
    let sched = TruncationSchedule::with_radii(&[2, 4]).seeded(8);
    let (fit_z, rep_z) = rd_scan(&z2, 2.0, &radii, &fams, 2, &sched).unwrap();
    let over = fit_z
        .radii
        .iter()
        .zip(&fit_z.ratios)
        .filter(|(&n, &r)| {
            let ball = (2 * n * n + 2 * n + 1) as f64;
            r > ball.powf(0.5) + 1e-9
        })
        .count();
    let f2 = Group::parse("free:2").unwrap();
    let (fit, rep_f) = rd_scan(&f2, 2.0, &radii, &fams, 2, &sched).unwrap();
    let opts = TransferOptions::default();
    let tr = rd_transfer_check(&f2, &fit, 4.0 / 3.0, &opts, &TruncationSchedule::with_radii(&[2]).seeded(8)).unwrap();
    let violations = tr.detail["violations"].as_u64().unwrap();
    let broken = tr.detail["mazur_broken"].as_u64().unwrap();
    let theta = tr.detail["theta"].as_f64().unwrap();
    // Independent recomputation of the Mazur identity on a few pairs.
    let mut id_worst = 0.0f64;
    for i in 0..20u64 {
        let f = random_function(&f2, 3, RandomMode::Complex, 0.5, seed::derive(8, &[0, i])).unwrap();
        let phi = random_function(&f2, 3, RandomMode::Complex, 0.5, seed::derive(8, &[1, i])).unwrap();
        let c = mazur_chain(&f, &phi, 2.0, 4.0 / 3.0).unwrap();
        let alpha = (4.0 / 3.0) / 2.0;
        let lhs: f64 = phi.entries().map(|(_, v)| v.norm().powf(alpha).powf(2.0)).sum();
        let rhs: f64 = phi.entries().map(|(_, v)| v.norm().powf(4.0 / 3.0)).sum();
        id_worst = id_worst.max((lhs - rhs).abs() / rhs);
        assert!(c.holds);
    }
    let ok = over == 0
        && no_fail(&rep_z)
        && no_fail(&rep_f)
        && fit.d_hat <= 2.0
        && violations == 0
        && (theta - 0.5).abs() < 1e-12
        && broken == 0
        && opts.samples == 200
        && opts.mazur_pairs == 200
        && id_worst < 1e-12;
    outcome(
        ok,
        format!(
            "Z2 {over} ratios above |B_n|^(1/2); F2 D_hat {:.3} C {:.3}; transfer {violations}/200 violations (theta {theta}); Mazur {broken}/200 broken, identity {id_worst:.1e}",
            fit.d_hat, fit.c_hat
        ),
    )
}

fn folner() -> Outcome {
    let z = Group::parse("z").unwrap();
    let pair = [z.parse_element("(0)").unwrap(), z.parse_element("(1)").unwrap()];
    let f = GroupFunction::indicator(&z, &pair).unwrap();
    let r1 = folner_identity_check(&f, 2.0, &TruncationSchedule::with_radii(&[200]), 0.995).unwrap();
    let a = r1.rows.last().unwrap().lower;
    let fourier = (0..4096).map(|k| fourier_z(&f, k as f64 * std::f64::consts::TAU / 4096.0).norm()).fold(0.0, f64::max);
    let z2 = Group::parse("zd:2").unwrap();
    let g = GroupFunction::ball_indicator(&z2, 1).unwrap();
    let r2 = folner_identity_check(&g, 3.0, &TruncationSchedule::with_radii(&[60]), 0.95).unwrap();
    let b = r2.rows.last().unwrap().lower;
    outcome(
        a >= 1.99 && a <= fourier * (1.0 + 1e-12) && b >= 0.95 * 5.0 && b <= 5.0 * (1.0 + 1e-12) && no_fail(&r1) && no_fail(&r2),
        format!("Z pair {a:.6} >= 1.99 (Fourier sup {fourier:.6}); Z2 ball {b:.6} >= 4.75 (l1 = 5)"),
    )
}

fn sobolev() -> Outcome {
    let fams = [Family::Spheres, Family::Balls, Family::RandomNonneg];
    let radii: Vec<usize> = (0..=6).collect();
    let sched = TruncationSchedule::with_radii(&[2, 4]).seeded(10);
    let f2 = Group::parse("free:2").unwrap();
    let (fit, _) = rd_scan(&f2, 2.0, &radii, &fams, 2, &sched).unwrap();
    let sp = SobolevParams::new(2.0, fit.c_hat, fit.d_hat, Some(fit.d_hat + 1.0)).unwrap();
    let mut sub_bad = 0;
    let mut norm_err = 0.0f64;
    for i in 0..100u64 {
        let a = random_function(&f2, 2, RandomMode::Complex, 0.5, seed::derive(10, &[0, i])).unwrap();
        let b = random_function(&f2, 2, RandomMode::Complex, 0.5, seed::derive(10, &[1, i])).unwrap();
        let r = submult_check(&a, &b, sp.t, 2.0, sp.k).unwrap();
        sub_bad += r.count(Verdict::Fail);
        let lhs = weighted_norm(&a.convolve(&b).unwrap(), sp.t, 2.0);
        let rhs = weighted_norm(&a, sp.t, 2.0) * weighted_norm(&b, sp.t, 2.0);
        norm_err = norm_err.max((r.detail["lhs"].as_f64().unwrap() - lhs).abs() / lhs);
        if lhs > 2f64.powf(sp.t) * sp.k * rhs {
            sub_bad += 1;
        }
    }
    let mut cont_bad = 0;
    let z2 = Group::parse("zd:2").unwrap();
    let (fit_z, _) = rd_scan(&z2, 2.0, &(0..=4).collect::<Vec<_>>(), &fams, 2, &sched).unwrap();
    for (g, fit) in [(&z2, &fit_z), (&f2, &fit)] {
        let p = SobolevParams::from_fit(fit, None).unwrap();
        for i in 0..100u64 {
            let f = random_function(g, 3, RandomMode::Complex, 0.5, seed::derive(10, &[2, i])).unwrap();
            cont_bad += containment_check(&f, &p, &sched).unwrap().count(Verdict::Fail);
        }
    }
    let z = Group::parse("z").unwrap();
    let tri = GroupFunction::ball_indicator(&z, 1).unwrap().scale(C64::new(1.0 / 3.0, 0.0));
    let ps = power_norm_sequence(&tri, 2.0, 2.0, 8, None, &TruncationSchedule::with_radii(&[8, 32])).unwrap();
    let ind_ok = ps.rows.len() == 8 && no_fail(&ps);
    outcome(
        sub_bad == 0 && norm_err < 1e-12 && cont_bad == 0 && ind_ok,
        format!(
            "submult {sub_bad}/100 violations at s = {:.3}, K = {:.3}; containment {cont_bad}/200; inductive bound n <= 8: {}",
            sp.t,
            sp.k,
            if ind_ok { "holds" } else { "broken" }
        ),
    )
}

fn derivation_flow() -> Outcome {
    let f2 = Group::parse("free:2").unwrap();
    let mut leib = 0.0f64;
    for i in 0..20u64 {
        let d = |k: u64| random_function(&f2, 2, RandomMode::Complex, 0.7, seed::derive(11, &[k, i])).unwrap();
        leib = leib.max(leibniz_error(&d(0), &d(1), &d(2)).unwrap());
    }
    let z = Group::parse("z").unwrap();
    let da = GroupFunction::delta(&z, &z.parse_element("(1)").unwrap()).unwrap();
    let opts = FlowOptions::default();
    let fl = flow_consistency_check(&da, &opts).unwrap();
    let errors: Vec<f64> = serde_json::from_value(fl.detail["errors"].clone()).unwrap();
    // On delta_a over Z every kernel entry has length jump +-1 or 0.
    let predicted: Vec<f64> = opts.t_values.iter().map(|&t| ((C64::from_polar(1.0, t) - 1.0) / t - C64::i()).norm()).collect();
    let flow_match = errors.iter().zip(&predicted).all(|(e, p)| (e - p).abs() < 1e-12);
    let ratios: Vec<f64> = errors.windows(2).map(|w| w[0] / w[1]).collect();
    let halving = ratios.iter().all(|r| (1.5..=2.5).contains(r)) && fl.verdict == Verdict::Pass;
    let sched = TruncationSchedule::with_radii(&[2, 4]).seeded(11);
    let (fit, _) = rd_scan(&f2, 2.0, &(0..=6).collect::<Vec<_>>(), &[Family::Spheres, Family::Balls, Family::RandomNonneg], 2, &sched).unwrap();
    let k_const = SobolevParams::from_fit(&fit, None).unwrap().k;
    let mut off = 0;
    for i in 0..20u64 {
        let f = random_function(&f2, 2, RandomMode::Complex, 0.5, seed::derive(11, &[3, i])).unwrap();
        for k in [1, 2] {
            let r = derivation_norm_bounds(&f, k, 2.0, 1.0, k_const, &sched).unwrap();
            off += r.rows.iter().filter(|row| row.verdict != Verdict::Pass).count();
        }
    }
    outcome(
        leib < 1e-10 && flow_match && halving && off == 0,
        format!("Leibniz max {leib:.1e}; flow ratios {ratios:.3?} (closed form match {flow_match}); sandwich {off}/120 rows off"),
    )
}

fn idempotent() -> Outcome {
    let z = Group::parse("z").unwrap();
    let e0 = GroupFunction::from_entries(
        &z,
        [("(0)", 1.0), ("(1)", 0.1), ("(-1)", 0.1)].map(|(g, v)| (z.parse_element(g).unwrap(), C64::new(v, 0.0))),
    )
    .unwrap();
    let (e, rep) = idempotent_promote(&e0, 1e-10, 6).unwrap();
    let res: Vec<f64> = serde_json::from_value(rep.detail["promotion"]["residuals"].clone()).unwrap();
    let iters = res.len() - 1;
    let quadratic = res.windows(2).all(|w| w[1] <= 10.0 * w[0] * w[0] || w[1] <= 1e-14);
    let mut worst = 0.0f64;
    for k in 0..512 {
        let theta = k as f64 * std::f64::consts::TAU / 512.0;
        let mut x = fourier_z(&e0, theta);
        for _ in 0..iters {
            x = 3.0 * x * x - 2.0 * x * x * x;
        }
        worst = worst.max((fourier_z(&e, theta) - x).norm());
    }
    let last = *res.last().unwrap();
    outcome(
        last < 1e-10 && iters <= 6 && quadratic && worst < 1e-10 && rep.verdict == Verdict::Pass,
        format!("residual {last:.1e} after {iters} iterations, quadratic {quadratic}; Fourier Newton oracle max diff {worst:.1e}"),
    )
}

const DETERMINISM: &str = r#"
[[experiment]]
name = "duality"
group = "cyclic:12"
seed = 13
params = { p = "3", samples = "10" }

[[experiment]]
name = "rd_transfer"
group = "free:2"
seed = 13
params = { radii = "0,1,2,3", transfer_samples = "20", mazur_pairs = "20" }
schedule = { radii = [2] }

[[experiment]]
name = "interpolation"
group = "free:2"
seed = 13
params = { samples = "5", radius = "2" }
schedule = { radii = [2], starts = 4 }

[[experiment]]
name = "oberlin"
seed = 13
params = { catalog = "sym:3;cyclic:6", samples = "2", ascent_steps = "10" }
"#;

fn determinism(dir: &Path) -> Outcome {
    let cfg = Config::parse(DETERMINISM, "determinism").unwrap();
    let mut csvs = Vec::new();
    for (k, sequential) in [(0, false), (1, false), (2, true)] {
        par::set_sequential(sequential);
        let out = dir.join(format!("run{k}"));
        let opts = RunOptions { out_dir: out.clone(), ..Default::default() };
        let s = run(&cfg, Path::new("determinism.toml"), &opts).unwrap();
        assert_eq!(s.blocks.len(), 4);
        let mut bytes = Vec::new();
        for name in ["duality", "rd_transfer", "interpolation", "oberlin"] {
            bytes.extend(std::fs::read(out.join(format!("{name}.rows.csv"))).unwrap());
        }
        csvs.push(bytes);
    }
    par::set_sequential(false);
    let same = csvs.windows(2).all(|w| w[0] == w[1]);
    outcome(same, format!("3 runs (2 parallel, 1 sequential) of a 4-block config, {} CSV bytes, identical: {same}", csvs[0].len()))
}

#[test]
fn acceptance() {
    let dir = tempfile::tempdir().unwrap();
    let criteria: Vec<(&str, Box<dyn Fn() -> Outcome>)> = vec![
        ("kesten value", Box::new(kesten)),
        ("endpoint exactness", Box::new(endpoints)),
        ("finite-group oracles", Box::new(finite_oracles)),
        ("duality", Box::new(duality)),
        ("tensor multiplicativity", Box::new(tensor)),
        ("abelian gap nullity", Box::new(|| abelian_gap(dir.path()))),
        ("interpolation", Box::new(interpolation)),
        ("rd suite", Box::new(rd_suite)),
        ("folner identity", Box::new(folner)),
        ("sobolev suite", Box::new(sobolev)),
        ("derivation and flow", Box::new(derivation_flow)),
        ("idempotent promotion", Box::new(idempotent)),
        ("determinism", Box::new(|| determinism(dir.path()))),
    ];
    let mut failed = Vec::new();
    for (i, (name, check)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let o = check();
        let line = format!(
            "acceptance {:>2} {:<24} {}  {} [{:.1} s]\n",
            i + 1,
            name,
            if o.ok { "PASS" } else { "FAIL" },
            o.detail,
            t.elapsed().as_secs_f64()
        );
        // Written past the test harness capture so the lines always show.
        std::io::stderr().write_all(line.as_bytes()).unwrap();
        if !o.ok {
            failed.push(i + 1);
        }
    }
    assert!(failed.is_empty(), "criteria failed: {failed:?}");
}
