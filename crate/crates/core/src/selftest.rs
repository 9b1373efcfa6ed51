//! Property suites exercising each result at desk scale. `Quick` runs about
//! a tenth of the cases with smaller search budgets.

use std::time::{Duration, Instant};

use serde_json::{json, Value};

use crate::classify::{
    check_trace_central, classify, form_grid, grid_star_product, nilpotency_dichotomy_probe, power_residual,
    star_square_norm, verify_certificate, Form, Options, Status,
};
use crate::elop::{apply, length, trace_vector, ElOp};
use crate::gen::{self, Kind};
use crate::matcore::{fro, identity, real, unit, vec_col, CMat, CVec, Tolerance, C64, ZERO};
use crate::nilspace::{common_flag, flag_residual, gerstenhaber_check, is_nilpotent_space, MatSpace};
use crate::rng;
use crate::specnorm::{infinitesimal_probe, ratio, search_blowup, Construction};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Quick,
    Full,
}

#[derive(Clone, Debug)]
pub struct Config {
    pub mode: Mode,
    pub seed: u64,
    pub tol: Tolerance,
}

#[derive(Clone, Debug)]
pub struct SuiteResult {
    pub name: &'static str,
    pub cases: usize,
    pub failures: Vec<String>,
    pub elapsed: Duration,
}

impl SuiteResult {
    pub fn pass(&self) -> bool {
        self.failures.is_empty()
    }

    pub fn to_json(&self) -> Value {
        json!({
            "name": self.name,
            "pass": self.pass(),
            "cases": self.cases,
            "failures": self.failures,
            "seconds": self.elapsed.as_secs_f64(),
        })
    }

    pub fn line(&self) -> String {
        let status = if self.pass() { "PASS" } else { "FAIL" };
        let mut s = format!("{status} {:<22} cases={:<4} {:.2}s", self.name, self.cases, self.elapsed.as_secs_f64());
        if let Some(first) = self.failures.first() {
            s.push_str(&format!("  [{} failing; first: {first}]", self.failures.len()));
        }
        s
    }
}

pub const SUITES: [&str; 9] = [
    "sufficient-bound",
    "trace-central",
    "length2-consequences",
    "grid-identity",
    "gerstenhaber",
    "length",
    "length3-round-trip",
    "infinitesimal",
    "dichotomy-soundness",
];

struct Ctx<'a> {
    cfg: &'a Config,
    bounded: Vec<(String, ElOp)>,
}

impl Ctx<'_> {
    fn count(&self, full: usize) -> usize {
        match self.cfg.mode {
            Mode::Full => full,
            Mode::Quick => full.div_ceil(10).max(2),
        }
    }

    fn budget(&self) -> usize {
        match self.cfg.mode {
            Mode::Full => 10_000,
            Mode::Quick => 2_000,
        }
    }

    fn seed(&self, suite: &str, i: usize) -> u64 {
        rng::indexed_seed(self.cfg.seed, suite, i as u64)
    }
}

/// Runs every suite in order; the last one consumes the bounded verdicts of
/// suites 1, 3 and 7.
pub fn run(cfg: &Config) -> Vec<SuiteResult> {
    let mut ctx = Ctx { cfg, bounded: Vec::new() };
    let mut out = Vec::new();
    type Suite = fn(&mut Ctx) -> (usize, Vec<String>);
    let suites: [Suite; 9] = [
        sufficient_bound,
        trace_central,
        length2_consequences,
        grid_identity,
        gerstenhaber,
        length_suite,
        length3_round_trip,
        infinitesimal,
        dichotomy_soundness,
    ];
    for (name, suite) in SUITES.iter().zip(suites) {
        let t = Instant::now();
        let (cases, failures) = suite(&mut ctx);
        out.push(SuiteResult { name, cases, failures, elapsed: t.elapsed() });
    }
    out
}

fn max_lambda(g: &gen::Generated) -> f64 {
    g.lambdas.iter().map(|l| l.norm()).fold(0.0, f64::max)
}

fn sufficient_bound(ctx: &mut Ctx) -> (usize, Vec<String>) {
    let tol = ctx.cfg.tol;
    let cases = ctx.count(200);
    let probes = ctx.count(200);
    let mut fails = Vec::new();
    for i in 0..cases {
        let seed = ctx.seed("sufficient-bound", i);
        let g = match gen::triangular(4, 1 + i % 3, seed) {
            Ok(g) => g,
            Err(e) => {
                fails.push(format!("case {i}: {e}"));
                continue;
            }
        };
        let lam = max_lambda(&g);
        let mut r = rng::labelled(seed, "probes");
        for _ in 0..probes {
            let x = rng::gauss_mat(&mut r, 4, 4);
            if let Ok(Some(v)) = ratio(&g.op, &x) {
                if v > lam + 1e-6 {
                    fails.push(format!("case {i}: probe ratio {v} above {lam}"));
                    break;
                }
            }
        }
        match search_blowup(&g.op, (lam * 1.01).max(1e-6), ctx.budget(), seed) {
            Ok(None) => {}
            Ok(Some(w)) => fails.push(format!("case {i}: witness with ratio {} above {lam}", w.last_ratio())),
            Err(e) => fails.push(format!("case {i}: {e}")),
        }
        let v = classify(&g.op, &tol, &Options::new(ctx.budget(), seed));
        if v.status == Status::Bounded {
            if v.bound.is_some_and(|b| b > lam * (1.0 + 1e-8) + 1e-12) {
                fails.push(format!("case {i}: certified bound {:?} above {lam}", v.bound));
            }
            ctx.bounded.push((format!("sufficient-bound {i}"), g.op));
        } else {
            fails.push(format!("case {i}: classified {}", v.status.as_str()));
        }
    }
    (cases, fails)
}

fn trace_central(ctx: &mut Ctx) -> (usize, Vec<String>) {
    let tol = ctx.cfg.tol;
    let cases = ctx.count(50);
    let mut fails = Vec::new();
    let mut orbit_hits = 0;
    for i in 0..cases {
        let seed = ctx.seed("trace-central", i);
        let n = 2 + i % 3;
        let g = match gen::unbounded_seeded(n, 1 + i % 3, seed) {
            Ok(g) => g,
            Err(e) => {
                fails.push(format!("case {i}: {e}"));
                continue;
            }
        };
        if check_trace_central(&g.op, &tol).0 {
            fails.push(format!("case {i}: non-scalar trace vector reported central"));
        }
        match search_blowup(&g.op, 1e3, 10_000, seed) {
            Ok(Some(w)) => {
                if matches!(w.construction, Construction::Orbit { .. }) {
                    orbit_hits += 1;
                }
                if let Err(e) = w.verify(&g.op) {
                    fails.push(format!("case {i}: witness does not verify: {e}"));
                }
            }
            Ok(None) => fails.push(format!("case {i}: no witness")),
            Err(e) => fails.push(format!("case {i}: {e}")),
        }
    }
    if (orbit_hits as f64) < 0.9 * cases as f64 {
        fails.push(format!("orbit family succeeded on {orbit_hits}/{cases}"));
    }
    let s = ElOp::two_sided(unit(2, 0, 1), identity(2)).expect("2x2");
    for k in 1..=20 {
        let k = f64::from(k);
        let x = CMat::from_row_slice(2, 2, &[ZERO, real(1.0 / k), real(k), ZERO]);
        match ratio(&s, &x) {
            Ok(Some(v)) if (v - k).abs() <= 1e-6 * k => {}
            other => fails.push(format!("closed form k={k}: ratio {other:?}")),
        }
    }
    (cases + 1, fails)
}

fn length2_consequences(ctx: &mut Ctx) -> (usize, Vec<String>) {
    let tol = ctx.cfg.tol;
    let cases = ctx.count(100);
    let mut fails = Vec::new();
    for i in 0..cases {
        let seed = ctx.seed("length2", i);
        let g = match gen::length2_good(3 + i % 3, seed) {
            Ok(g) => g,
            Err(e) => {
                fails.push(format!("case {i}: {e}"));
                continue;
            }
        };
        let cube = power_residual(&g.op, 3, 100, seed);
        if cube > 1e-8 {
            fails.push(format!("case {i}: ‖(Sx)³‖ = {cube:.3e}"));
        }
        let ss = star_square_norm(&g.op);
        if ss > 1e-9 {
            fails.push(format!("case {i}: ‖S*S‖ = {ss:.3e}"));
        }
        let v = classify(&g.op, &tol, &Options::new(ctx.budget(), seed));
        if v.status == Status::Bounded {
            ctx.bounded.push((format!("length2 {i}"), g.op));
        } else {
            fails.push(format!("case {i}: classified {}", v.status.as_str()));
        }
    }
    (cases, fails)
}

fn grid_identity(ctx: &mut Ctx) -> (usize, Vec<String>) {
    let cases = ctx.count(100);
    let lambdas = [C64::new(0.0, 0.0), C64::new(1.0, 0.0), C64::new(2.0, 0.0), C64::new(1.0, 1.0)];
    let mut fails = Vec::new();
    for i in 0..cases {
        let n = 4 + i % 3;
        let form = if i % 2 == 0 { Form::II } else { Form::III };
        let lambda = lambdas[(i / 2) % 4];
        let mut r = rng::labelled(ctx.seed("grid-identity", i), "params");
        let v: Vec<CVec> = (0..4).map(|_| rng::gauss_vec(&mut r, n)).collect();
        let grid = match form_grid(form, n, lambda, &v[0], &v[1], &v[2], &v[3]) {
            Ok(g) => g,
            Err(e) => {
                fails.push(format!("case {i}: {e}"));
                continue;
            }
        };
        let st = grid_star_product(&grid);
        let scale = grid.max_norm().powi(2).max(1.0);
        for _ in 0..20 {
            let x = rng::gauss_mat(&mut r, n, n);
            let y = apply(&st, &x).expect("same dimension");
            let res = fro(&(&y - &x * (lambda * lambda * 3.0)));
            if res > 1e-8 * scale * fro(&x) {
                fails.push(format!("case {i}: residual {res:.3e}"));
                break;
            }
        }
    }
    (cases, fails)
}

fn gerstenhaber(ctx: &mut Ctx) -> (usize, Vec<String>) {
    let tol = ctx.cfg.tol;
    let mut fails = Vec::new();
    let full = MatSpace::strictly_upper(4);
    let g = gerstenhaber_check(&full, &tol);
    if !(g.is_nilpotent && g.saturated && g.dim == 6 && g.bound == 6) {
        fails.push(format!("strictly upper space: {g:?}"));
    }
    let mut r = rng::labelled(ctx.cfg.seed, "gerstenhaber");
    let conj = rng::gauss_mat(&mut r, 4, 4) + identity(4) * real(2.0);
    match full.conjugate(&conj) {
        Ok(space) => match common_flag(4, space.basis(), tol.rank_rel) {
            Some(p) if flag_residual(&p, space.basis()) <= 1e-8 * space.scale() => {}
            other => fails.push(format!("conjugated space not triangularized: {:?}", other.map(|p| flag_residual(&p, space.basis())))),
        },
        Err(e) => fails.push(e.to_string()),
    }
    let cases = ctx.count(100);
    for i in 0..cases {
        let d = 1 + rng::index(&mut r, 6);
        let basis: Vec<CMat> = (0..d).map(|_| crate::nilspace::random_element(&full, &mut r)).collect();
        match MatSpace::new(4, basis, &tol) {
            Ok(sub) => {
                let g = gerstenhaber_check(&sub, &tol);
                if !g.is_nilpotent || g.dim > g.bound {
                    fails.push(format!("subspace {i}: {g:?}"));
                }
            }
            Err(e) => fails.push(format!("subspace {i}: {e}")),
        }
    }
    let mut basis = full.basis().to_vec();
    basis.push(unit(4, 0, 0));
    match MatSpace::new(4, basis, &tol) {
        Ok(s) if !is_nilpotent_space(&s, &tol) => {}
        _ => fails.push("adding e11 kept the space nilpotent".into()),
    }
    (cases + 3, fails)
}

/// Rank of the Gram matrix of `vec(aᵢ)vec(bᵢ)ᵀ` by Gaussian elimination with
/// partial pivoting; independent of the SVD used by [`elop::length`].
pub fn gram_rank(s: &ElOp, rel: f64) -> usize {
    let k = s.term_count();
    let blocks: Vec<CVec> = s.terms().iter().map(|(a, b)| vec_col(&(vec_col(a) * vec_col(b).transpose()))).collect();
    let mut g = CMat::from_fn(k, k, |i, j| blocks[i].dotc(&blocks[j]));
    let scale = (0..k).map(|i| g[(i, i)].norm()).fold(0.0, f64::max);
    let mut rank = 0;
    for col in 0..k {
        let Some(p) = (rank..k).max_by(|&a, &b| g[(a, col)].norm().partial_cmp(&g[(b, col)].norm()).unwrap()) else { break };
        if g[(p, col)].norm() <= rel * scale {
            continue;
        }
        g.swap_rows(p, rank);
        for i in rank + 1..k {
            let f = g[(i, col)] / g[(rank, col)];
            for j in col..k {
                let v = g[(rank, j)];
                g[(i, j)] -= f * v;
            }
        }
        rank += 1;
    }
    rank
}

fn length_suite(ctx: &mut Ctx) -> (usize, Vec<String>) {
    let tol = ctx.cfg.tol;
    let cases = ctx.count(100);
    let mut fails = Vec::new();
    for i in 0..cases {
        let planted = 1 + i % 6;
        let seed = ctx.seed("length", i);
        let mut g = gen::random(planted, 4, seed).expect("n = 4");
        // Pad with combinations of the planted terms so the representation is
        // longer than the length.
        let mut r = rng::labelled(seed, "padding");
        let extra: Vec<(CMat, CMat)> = (0..2)
            .map(|_| {
                let j = rng::index(&mut r, planted);
                let (a, b) = &g.op.terms()[j];
                (a * rng::gauss(&mut r), -b.clone() * rng::gauss(&mut r))
            })
            .collect();
        let mut terms = g.op.terms().to_vec();
        terms.extend(extra);
        g.op = ElOp::new(4, terms).expect("n = 4");
        let len = length(&g.op, &tol);
        let oracle = gram_rank(&g.op, 1e-10);
        if len != oracle || oracle != planted {
            fails.push(format!("case {i}: length {len}, gram rank {oracle}, planted {planted}"));
        }
    }
    (cases, fails)
}

fn length3_round_trip(ctx: &mut Ctx) -> (usize, Vec<String>) {
    let tol = ctx.cfg.tol;
    let per = ctx.count(50);
    let mut fails = Vec::new();
    let kinds = [(Kind::Triangular, Some(Form::I)), (Kind::Form2, Some(Form::II)), (Kind::Form3, Some(Form::III)), (Kind::UnboundedSeeded, None)];
    for (kind, form) in kinds {
        for i in 0..per {
            let seed = ctx.seed(kind.name(), i);
            let n = 4 + i % 2;
            let g = gen::generate(kind, n, Some(3), seed).and_then(|g| if kind == Kind::Triangular { gen::disguise(g, seed) } else { Ok(g) });
            let g = match g {
                Ok(g) => g,
                Err(e) => {
                    fails.push(format!("{} {i}: {e}", kind.name()));
                    continue;
                }
            };
            let v = classify(&g.op, &tol, &Options::new(ctx.budget(), seed));
            let ok = match form {
                Some(f) => v.status == Status::Bounded && v.form == Some(f),
                None => v.status == Status::Unbounded && v.witness().is_some_and(|w| w.verify(&g.op).is_ok()),
            };
            if !ok {
                fails.push(format!("{} {i}: {} {:?}", kind.name(), v.status.as_str(), v.form.map(Form::as_str)));
            } else if let Err(e) = verify_certificate(&g.op, &v, &tol) {
                fails.push(format!("{} {i}: certificate: {e}", kind.name()));
            }
            if v.status == Status::Bounded {
                ctx.bounded.push((format!("{} {i}", kind.name()), g.op));
            }
        }
    }
    (4 * per, fails)
}

fn infinitesimal(ctx: &mut Ctx) -> (usize, Vec<String>) {
    let cases = ctx.count(50);
    let mut fails = Vec::new();
    for i in 0..cases {
        let seed = ctx.seed("infinitesimal", i);
        let g = match gen::zero_grid(4, 3, seed) {
            Ok(g) => g,
            Err(e) => {
                fails.push(format!("case {i}: {e}"));
                continue;
            }
        };
        if !infinitesimal_probe(&g.op, 100, seed) {
            fails.push(format!("case {i}: infinitesimal probe failed"));
        }
        let k = fro(&trace_vector(&g.op));
        if k > 1e-9 {
            fails.push(format!("case {i}: ‖trace vector‖ = {k:.3e}"));
        }
        let fifth = power_residual(&g.op, 5, 100, seed);
        if fifth > 1e-8 {
            fails.push(format!("case {i}: ‖(Sx)⁵‖ = {fifth:.3e}"));
        }
    }
    (cases, fails)
}

fn dichotomy_soundness(ctx: &mut Ctx) -> (usize, Vec<String>) {
    let tol = ctx.cfg.tol;
    let mut fails = Vec::new();
    for (i, (label, s)) in ctx.bounded.iter().enumerate() {
        let report = nilpotency_dichotomy_probe(s, 50, ctx.seed("dichotomy", i), &tol);
        if report.red_flags > 0 {
            fails.push(format!("{label}: {} red flags", report.red_flags));
        }
    }
    if ctx.bounded.is_empty() {
        fails.push("no bounded verdicts to probe".into());
    }
    (ctx.bounded.len(), fails)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quick_run_passes() {
        let cfg = Config { mode: Mode::Quick, seed: 0, tol: Tolerance::default() };
        let results = run(&cfg);
        assert_eq!(results.len(), 9);
        for r in &results {
            assert!(r.pass(), "{}", r.line());
        }
    }

    #[test]
    fn gram_rank_matches_planted_length() {
        let mut r = rng::rng(5);
        let a = rng::gauss_mat(&mut r, 3, 3);
        let b = rng::gauss_mat(&mut r, 3, 3);
        let c = rng::gauss_mat(&mut r, 3, 3);
        let s = ElOp::new(3, vec![(a.clone(), b.clone()), (c, b.clone()), (a * real(2.0), b)]).unwrap();
        assert_eq!(gram_rank(&s, 1e-10), 2);
    }
}
