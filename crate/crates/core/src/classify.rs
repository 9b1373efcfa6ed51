//! Necessary and sufficient conditions for spectral boundedness, the
//! length-2 and length-3 classifiers and their certificates.
//!
//! Product-grid facts used throughout, for a representation `S = Σ M_{uⱼ,vⱼ}`
//! on `M_n` with independent coefficients:
//!
//! * A recombination `C` conjugates every scalar slice `E_pq` of the grid by
//!   `Cᵀ`, so grid normal forms are simultaneous similarity problems on
//!   `k × k` matrices.
//! * With two or more terms a diagonal entry `vᵢuᵢ = λI`, `λ ≠ 0`, forces some
//!   coefficient to vanish, so every triangular grid of length `≥ 2` is
//!   strictly triangular, and the three-term grids with `λI` on the diagonal
//!   only occur with `λ = 0`.
//! * The `λ = 0` three-term forms have slices in `span{A, B}`, `A = e₁₂ + e₂₃`,
//!   `B = e₂₁ − e₃₂`, whose elements are all nilpotent.

use serde_json::{json, Value};

use crate::elop::{
    self, apply, compose, length, map_norm, minimal_rep, probe_distance, product_grid, recombine, spaces, star,
    superoperator_matrix, trace_vector, ElOp, ProductGrid,
};
use crate::json::{complex_to_value, matrix_to_value, operator_to_value, real_to_value, vector_to_value, witness_to_value};
use crate::matcore::{
    self, fro, hstack, identity, inverse, mat_pow, nilpotency_defect, null_space, null_space_below, prescribe, real,
    scalar_of_identity, singular_values, vec_col, CMat, CVec, Tolerance, C64, ZERO,
};
use crate::nilspace::common_flag_scaled;
use crate::rng;
use crate::specnorm::{search_blowup_with_hints, BlowupWitness};
use crate::{Error, Result};

pub const DEFAULT_THRESHOLD: f64 = 1e3;
pub const DEFAULT_BUDGET: usize = 10_000;
const DICHOTOMY_SAMPLES: usize = 16;
const PROBES: usize = 20;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    Bounded,
    Unbounded,
    Infinitesimal,
    Undecided,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::Bounded => "BOUNDED",
            Status::Unbounded => "UNBOUNDED",
            Status::Infinitesimal => "INFINITESIMAL",
            Status::Undecided => "UNDECIDED",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Form {
    I,
    II,
    III,
    Exceptional,
}

impl Form {
    pub fn as_str(self) -> &'static str {
        match self {
            Form::I => "i",
            Form::II => "ii",
            Form::III => "iii",
            Form::Exceptional => "exceptional",
        }
    }
}

/// Which coefficient family of the two-dimensional exceptional form is
/// rank one with a common factor.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    /// `aᵢ = η fᵢᵀ` for a common `η`.
    Left,
    /// `bᵢ = hᵢ ηᵀ` for a common `η`.
    Right,
}

#[derive(Clone, Debug)]
pub enum Certificate {
    /// `vᵢuⱼ = 0` for `i > j`, `vᵢuᵢ = λᵢI`.
    Triangular { rep: ElOp, lambdas: Vec<C64> },
    /// Three-term grid `[[0, X, 0], [Y, 0, X], [0, −Y, 0]]` with
    /// `X = ζ₁fᵀ, Y = ζ₀fᵀ` (form ii) or `X = ζ₀gᵀ, Y = ζ₀fᵀ` (form iii).
    Grid { form: Form, rep: ElOp, zeta0: CVec, zeta1: Option<CVec>, f: CVec, g: Option<CVec> },
    /// On `M₂`: `g⁻¹ S(z) g` is `[[λ tr z, *], [0, 0]]` (left) or
    /// `[[0, 0], [*, λ tr z]]` (right).
    Exceptional { lambda: C64, eta: CVec, conjugator: CMat, side: Side },
    Witness(BlowupWitness),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub detail: Value,
}

impl Check {
    pub fn new(name: &str, pass: bool, detail: Value) -> Self {
        Check { name: name.to_string(), pass, detail }
    }

    pub fn to_json(&self) -> Value {
        json!({"name": self.name, "pass": self.pass, "detail": self.detail})
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Budgets {
    pub blowup_budget: usize,
    pub blowup_evaluations: usize,
    pub dichotomy_samples: usize,
}

#[derive(Clone, Debug)]
pub struct Verdict {
    pub status: Status,
    pub form: Option<Form>,
    pub certificate: Option<Certificate>,
    /// Certified upper bound on the spectral norm, for BOUNDED verdicts.
    pub bound: Option<f64>,
    pub checks: Vec<Check>,
    pub budgets: Budgets,
    pub seed: u64,
    pub reason: Option<String>,
}

impl Verdict {
    fn new(seed: u64) -> Self {
        Verdict {
            status: Status::Undecided,
            form: None,
            certificate: None,
            bound: None,
            checks: Vec::new(),
            budgets: Budgets::default(),
            seed,
            reason: None,
        }
    }

    /// Bounded with certified norm zero, or the zero operator.
    pub fn is_infinitesimal(&self) -> bool {
        self.status == Status::Infinitesimal || (self.status == Status::Bounded && self.bound == Some(0.0))
    }

    pub fn witness(&self) -> Option<&BlowupWitness> {
        match &self.certificate {
            Some(Certificate::Witness(w)) => Some(w),
            _ => None,
        }
    }

    pub fn to_json(&self) -> Value {
        json!({
            "status": self.status.as_str(),
            "form": self.form.map(Form::as_str),
            "certificate": self.certificate.as_ref().map(certificate_to_json),
            "bound": self.bound.map(real_to_value),
            "infinitesimal": self.is_infinitesimal(),
            "checks": self.checks.iter().map(Check::to_json).collect::<Vec<_>>(),
            "budgets": {
                "blowup_budget": self.budgets.blowup_budget,
                "blowup_evaluations": self.budgets.blowup_evaluations,
                "dichotomy_samples": self.budgets.dichotomy_samples,
            },
            "seed": self.seed,
            "reason": self.reason,
        })
    }
}

pub fn certificate_to_json(c: &Certificate) -> Value {
    match c {
        Certificate::Triangular { rep, lambdas } => json!({
            "kind": "triangular",
            "rep": operator_to_value(rep),
            "lambdas": lambdas.iter().map(|&l| complex_to_value(l)).collect::<Vec<_>>(),
        }),
        Certificate::Grid { form, rep, zeta0, zeta1, f, g } => json!({
            "kind": "grid",
            "form": form.as_str(),
            "rep": operator_to_value(rep),
            "lambda": complex_to_value(ZERO),
            "zeta0": vector_to_value(zeta0),
            "zeta1": zeta1.as_ref().map(vector_to_value),
            "f": vector_to_value(f),
            "g": g.as_ref().map(vector_to_value),
        }),
        Certificate::Exceptional { lambda, eta, conjugator, side } => json!({
            "kind": "exceptional",
            "lambda": complex_to_value(*lambda),
            "eta": vector_to_value(eta),
            "conjugator": matrix_to_value(conjugator),
            "side": match side { Side::Left => "left", Side::Right => "right" },
        }),
        Certificate::Witness(w) => {
            let mut v = witness_to_value(w);
            v["kind"] = json!("witness");
            v
        }
    }
}

/// Knobs shared by the classifiers.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Options {
    pub budget: usize,
    pub seed: u64,
    pub threshold: f64,
}

impl Default for Options {
    fn default() -> Self {
        Options { budget: DEFAULT_BUDGET, seed: 0, threshold: DEFAULT_THRESHOLD }
    }
}

impl Options {
    pub fn new(budget: usize, seed: u64) -> Self {
        Options { budget, seed, ..Options::default() }
    }
}

/// Whether `Σ bᵢaᵢ ∈ ℂI`, with the matrix itself.
pub fn check_trace_central(s: &ElOp, tol: &Tolerance) -> (bool, CMat) {
    let k = trace_vector(s);
    (scalar_of_identity(&k, tol).is_some(), k)
}

#[derive(Clone, Debug)]
pub enum HomVerdict {
    Hom,
    /// `‖u x y v − u x v · u y v‖` is `residual` at the witness pair.
    NotHom { x: CMat, y: CMat, residual: f64 },
}

/// Whether `x ↦ u x v` is multiplicative: `vu = I`, or `vu = 0` together with
/// the map vanishing on probes.
pub fn check_mult_homomorphism(u: &CMat, v: &CMat, tol: &Tolerance) -> Result<HomVerdict> {
    let n = u.nrows();
    if u.ncols() != n || v.nrows() != n || v.ncols() != n {
        return Err(Error::DimensionMismatch { expected: n, got: v.nrows() });
    }
    let e = v * u;
    let scale = (fro(u) * fro(v)).max(f64::MIN_POSITIVE);
    let near = |m: &CMat, target: &CMat| fro(&(m - target)) <= tol.scalar_rel * scale.max(1.0);
    let mut r = rng::labelled(0, "mult-hom");
    let mut probes: Vec<CMat> = (0..8).map(|_| rng::gauss_mat(&mut r, n, n)).collect();
    for i in 0..n {
        for j in 0..n {
            probes.push(matcore::unit(n, i, j));
        }
    }
    if near(&e, &identity(n)) {
        return Ok(HomVerdict::Hom);
    }
    if near(&e, &CMat::zeros(n, n)) && probes.iter().all(|x| fro(&(u * x * v)) <= tol.scalar_rel * scale) {
        return Ok(HomVerdict::Hom);
    }
    let mut best: Option<(CMat, CMat, f64)> = None;
    for x in &probes {
        for y in &probes {
            let res = fro(&(u * x * y * v - u * x * v * u * y * v));
            if best.as_ref().is_none_or(|b| res > b.2) {
                best = Some((x.clone(), y.clone(), res));
            }
        }
    }
    let (x, y, residual) = best.expect("probe set is non-empty");
    Ok(HomVerdict::NotHom { x, y, residual })
}

/// Largest `‖vᵢ‖‖uⱼ‖`, the natural size of grid entries.
fn grid_scale(s: &ElOp) -> f64 {
    let mut m: f64 = 0.0;
    for (_, v) in s.terms() {
        for (u, _) in s.terms() {
            m = m.max(fro(v) * fro(u));
        }
    }
    m.max(f64::MIN_POSITIVE)
}

/// A recombination of the minimal representation whose grid is triangular
/// with scalar diagonal. Exact: the scalar slices must share a flag.
/// `budget` and `seed` are accepted for interface stability and unused.
pub fn find_triangular_rep(s: &ElOp, tol: &Tolerance, _budget: usize, _seed: u64) -> Option<(ElOp, Vec<C64>)> {
    let m = minimal_rep(s, tol);
    match m.term_count() {
        0 => Some((m, Vec::new())),
        1 => {
            let (u, v) = &m.terms()[0];
            scalar_of_identity(&(v * u), tol).map(|l| (m.clone(), vec![l]))
        }
        k => {
            let grid = product_grid(&m);
            let p = common_flag_scaled(k, &grid.slices(), tol.rank_rel, grid_scale(&m))?;
            let rep = recombine(&m, &p.transpose()).ok()?;
            triangular_residual(&rep, tol).then(|| (rep, vec![ZERO; k]))
        }
    }
}

fn triangular_residual(rep: &ElOp, tol: &Tolerance) -> bool {
    let g = product_grid(rep);
    let scale = grid_scale(rep);
    let k = g.n_terms;
    (0..k).all(|i| (0..=i).all(|j| fro(g.get(i, j)) <= 1e-8 * scale.max(tol.spec_abs)))
}

/// Length-two exceptional form on `M₂`, with `K = Σ bᵢaᵢ = λI`.
fn find_exceptional(s: &ElOp, tol: &Tolerance) -> Option<Certificate> {
    if s.dim() != 2 {
        return None;
    }
    let lambda = scalar_of_identity(&trace_vector(s), tol)?;
    let n = 2;
    let lefts: Vec<CMat> = s.left().cloned().collect();
    let rights: Vec<CMat> = s.right().cloned().collect();
    let wide = hcat(&lefts);
    let tall = hcat(&rights.iter().map(|b| b.transpose()).collect::<Vec<_>>());
    for (side, m) in [(Side::Left, wide), (Side::Right, tall)] {
        let sv = singular_values(&m);
        if sv.len() < 2 || sv[0] == 0.0 || sv[1] > tol.rank_rel.sqrt() * sv[0] {
            continue;
        }
        let eta: CVec = matcore::svd(&m).u.column(0).into_owned();
        let conjugator = match side {
            Side::Left => {
                let perp = CVec::from_vec(vec![-eta[1].conj(), eta[0].conj()]);
                hstack(&[eta.clone(), perp], n)
            }
            // Second row of g⁻¹ equal to ηᵀ.
            Side::Right => {
                let perp = CVec::from_vec(vec![eta[1].conj(), -eta[0].conj()]);
                let mut gi = CMat::zeros(2, 2);
                gi.set_row(0, &perp.transpose());
                gi.set_row(1, &eta.transpose());
                inverse(&gi).ok()?
            }
        };
        let cert = Certificate::Exceptional { lambda, eta, conjugator, side };
        if verify_exceptional(s, &cert, 0).is_ok() {
            return Some(cert);
        }
    }
    None
}

fn hcat(ms: &[CMat]) -> CMat {
    let n = ms.first().map_or(0, |m| m.nrows());
    let total: usize = ms.iter().map(|m| m.ncols()).sum();
    let mut out = CMat::zeros(n, total);
    let mut c = 0;
    for m in ms {
        out.view_mut((0, c), (n, m.ncols())).copy_from(m);
        c += m.ncols();
    }
    out
}

fn verify_exceptional(s: &ElOp, cert: &Certificate, seed: u64) -> std::result::Result<(), String> {
    let Certificate::Exceptional { lambda, conjugator, side, .. } = cert else {
        return Err("not an exceptional certificate".into());
    };
    let gi = inverse(conjugator).map_err(|e| e.to_string())?;
    let mut r = rng::labelled(seed, "exceptional-probe");
    for _ in 0..PROBES {
        let z = rng::gauss_mat(&mut r, 2, 2);
        let c = &gi * apply(s, &z).map_err(|e| e.to_string())? * conjugator;
        let scale = fro(&c).max(fro(&z) * lambda.norm()).max(1e-300);
        let (zeros, corner) = match side {
            Side::Left => ([c[(1, 0)], c[(1, 1)]], c[(0, 0)]),
            Side::Right => ([c[(0, 0)], c[(0, 1)]], c[(1, 1)]),
        };
        if zeros.iter().any(|x| x.norm() > 1e-8 * scale) || (corner - lambda * z.trace()).norm() > 1e-8 * scale {
            return Err("normal form residual too large".into());
        }
    }
    Ok(())
}

/// Exact solver for the `λ = 0` three-term forms: finds `P` conjugating all
/// scalar slices into `span{A, B}` and reads `X = G(1,2)`, `Y = G(2,1)`.
fn find_grid_form(m: &ElOp, tol: &Tolerance) -> Option<Certificate> {
    if m.term_count() != 3 {
        return None;
    }
    let grid = product_grid(m);
    let w = elop::orthonormal_span(3, &grid.slices(), tol);
    let p = match w.len() {
        1 => {
            let a = &w[0];
            let a2 = a * a;
            let d = matcore::svd(&a2);
            if d.s[0] <= 1e-8 * fro(a).powi(2) {
                return None;
            }
            let v3: CVec = d.vt.row(0).adjoint();
            hstack(&[&a2 * &v3, a * &v3, v3], 3)
        }
        2 => {
            let (w1, w2) = (&w[0], &w[1]);
            let mut stacked = CMat::zeros(9, 3);
            stacked.view_mut((0, 0), (3, 3)).copy_from(&(w1 * w1));
            stacked.view_mut((3, 0), (3, 3)).copy_from(&(w2 * w2));
            stacked.view_mut((6, 0), (3, 3)).copy_from(&(w1 * w2 + w2 * w1));
            let kernel = null_space_below(&stacked, 1e-7);
            if kernel.ncols() != 1 {
                return None;
            }
            let l: CVec = kernel.column(0).into_owned();
            let u1 = w1 * &l;
            let u3 = w2 * &l;
            let c = l.dotc(&(w1 * &u3)) / l.dotc(&l);
            if c.norm() <= 1e-8 {
                return None;
            }
            hstack(&[u1, l, u3 / c], 3)
        }
        _ => return None,
    };
    if matcore::rank_with(&p, tol.rank_rel) != 3 {
        return None;
    }
    let rep = recombine(m, &p.transpose()).ok()?;
    let g = product_grid(&rep);
    let x = g.get(0, 1).clone();
    let y = g.get(1, 0).clone();
    let scale = grid_scale(&rep);
    let close = |a: &CMat, b: &CMat| fro(&(a - b)) <= 1e-8 * scale;
    let z = CMat::zeros(m.dim(), m.dim());
    let pattern_ok = close(g.get(1, 2), &x)
        && close(g.get(2, 1), &(-&y))
        && [(0, 0), (0, 2), (1, 1), (2, 0), (2, 2)].iter().all(|&(i, j)| close(g.get(i, j), &z));
    if !pattern_ok {
        return None;
    }
    let n = m.dim();
    let tall = stack_rows(&x, &y);
    if let Some((col, row)) = rank_one(&tall, tol) {
        let zeta1 = col.rows(0, n).into_owned();
        let zeta0 = col.rows(n, n).into_owned();
        return Some(Certificate::Grid { form: Form::II, rep, zeta0, zeta1: Some(zeta1), f: row, g: None });
    }
    let wide = hcat(&[x, y]);
    if let Some((col, row)) = rank_one(&wide, tol) {
        let gv = row.rows(0, n).into_owned();
        let f = row.rows(n, n).into_owned();
        return Some(Certificate::Grid { form: Form::III, rep, zeta0: col, zeta1: None, f, g: Some(gv) });
    }
    None
}

fn stack_rows(x: &CMat, y: &CMat) -> CMat {
    let (r, c) = x.shape();
    let mut out = CMat::zeros(2 * r, c);
    out.view_mut((0, 0), (r, c)).copy_from(x);
    out.view_mut((r, 0), (r, c)).copy_from(y);
    out
}

/// `(c, f)` with `m = c fᵀ` and `‖f‖ = 1`, when `m` is numerically rank one.
fn rank_one(m: &CMat, tol: &Tolerance) -> Option<(CVec, CVec)> {
    let d = matcore::svd(m);
    let s0 = *d.s.first()?;
    if s0 == 0.0 || d.s.get(1).is_some_and(|&s1| s1 > tol.rank_rel.sqrt() * s0) {
        return None;
    }
    let col: CVec = d.u.column(0) * real(s0);
    let row: CVec = d.vt.row(0).transpose();
    Some((col, row))
}

/// Pattern grid of a three-term certificate.
pub fn form_grid(form: Form, n: usize, lambda: C64, zeta0: &CVec, zeta1: &CVec, f: &CVec, g: &CVec) -> Result<ProductGrid> {
    let o = matcore::outer;
    let (x, y) = match form {
        Form::II => (o(zeta1, f), o(zeta0, f)),
        Form::III => (o(zeta0, g), o(zeta0, f)),
        _ => return Err(Error::Precondition("form must be ii or iii".into())),
    };
    let l = identity(n) * lambda;
    let z = CMat::zeros(n, n);
    ProductGrid::new(
        n,
        vec![
            vec![l.clone(), x.clone(), z.clone()],
            vec![y.clone(), l.clone(), x],
            vec![z, -y, l],
        ],
    )
}

/// `S*S` from the grid alone: terms `(G(i,j), G(j,i))`.
pub fn grid_star_product(g: &ProductGrid) -> ElOp {
    let mut terms = Vec::with_capacity(g.n_terms * g.n_terms);
    for i in 0..g.n_terms {
        for j in 0..g.n_terms {
            terms.push((g.get(i, j).clone(), g.get(j, i).clone()));
        }
    }
    ElOp::new(g.ambient_dim, terms).expect("grid entries share one shape")
}

/// Re-verifies a verdict's certificate against `S`.
pub fn verify_certificate(s: &ElOp, v: &Verdict, _tol: &Tolerance) -> std::result::Result<(), String> {
    let Some(cert) = &v.certificate else {
        return match v.status {
            Status::Bounded | Status::Unbounded => Err("missing certificate".into()),
            _ => Ok(()),
        };
    };
    let same_map = |rep: &ElOp| -> std::result::Result<(), String> {
        let d = probe_distance(rep, s, PROBES, v.seed).map_err(|e| e.to_string())?;
        let scale = map_norm(s).max(1.0);
        if d > 1e-9 * scale {
            return Err(format!("certified representation differs from S by {d:.3e}"));
        }
        Ok(())
    };
    match cert {
        Certificate::Triangular { rep, lambdas } => {
            same_map(rep)?;
            let g = product_grid(rep);
            let scale = grid_scale(rep);
            for i in 0..g.n_terms {
                if fro(&(g.get(i, i) - identity(g.ambient_dim) * lambdas[i])) > 1e-8 * scale {
                    return Err(format!("diagonal entry {i} is not λI"));
                }
                for j in 0..i {
                    if fro(g.get(i, j)) > 1e-8 * scale {
                        return Err(format!("grid entry ({i},{j}) below the diagonal is nonzero"));
                    }
                }
            }
            Ok(())
        }
        Certificate::Grid { form, rep, zeta0, zeta1, f, g } => {
            same_map(rep)?;
            let n = rep.dim();
            let zero = CVec::zeros(n);
            let want = form_grid(*form, n, ZERO, zeta0, zeta1.as_ref().unwrap_or(&zero), f, g.as_ref().unwrap_or(&zero))
                .map_err(|e| e.to_string())?;
            let got = product_grid(rep);
            let scale = grid_scale(rep);
            for i in 0..3 {
                for j in 0..3 {
                    if fro(&(got.get(i, j) - want.get(i, j))) > 1e-8 * scale {
                        return Err(format!("grid entry ({i},{j}) does not match form {}", form.as_str()));
                    }
                }
            }
            Ok(())
        }
        Certificate::Exceptional { .. } => verify_exceptional(s, cert, v.seed),
        Certificate::Witness(w) => w.verify(s),
    }
}

fn trace_check(s: &ElOp, tol: &Tolerance) -> (bool, Check) {
    let (ok, k) = check_trace_central(s, tol);
    let lambda = scalar_of_identity(&k, tol);
    (ok, Check::new("trace_central", ok, json!({"scalar": lambda.map(complex_to_value), "trace_vector": matrix_to_value(&k)})))
}

fn length_check(len: usize, expected: Option<usize>) -> Check {
    Check::new("length", expected.is_none_or(|e| e == len), json!(len))
}

impl Verdict {
    fn bounded(&mut self, form: Form, cert: Certificate, bound: f64) {
        self.status = Status::Bounded;
        self.form = Some(form);
        self.certificate = Some(cert);
        self.bound = Some(bound);
    }
}

/// Tries a certified form and records the attempt.
fn try_triangular(v: &mut Verdict, s: &ElOp, tol: &Tolerance, opts: &Options) -> bool {
    let found = find_triangular_rep(s, tol, opts.budget, opts.seed);
    let Some((rep, lambdas)) = found else {
        v.checks.push(Check::new("triangular", false, Value::Null));
        return false;
    };
    let bound = lambdas.iter().map(|l| l.norm()).fold(0.0, f64::max);
    let detail = json!({"lambdas": lambdas.iter().map(|&l| complex_to_value(l)).collect::<Vec<_>>()});
    let mut trial = v.clone();
    trial.bounded(Form::I, Certificate::Triangular { rep, lambdas }, bound);
    let ok = verify_certificate(s, &trial, tol).is_ok();
    v.checks.push(Check::new("triangular", ok, detail));
    if ok {
        *v = trial;
    }
    ok
}

/// Final falsifier stage shared by all classifiers.
fn falsify(v: &mut Verdict, s: &ElOp, tol: &Tolerance, opts: &Options, necessary_failed: bool) {
    let probe = nilpotency_dichotomy_probe(s, DICHOTOMY_SAMPLES, opts.seed, tol);
    v.budgets.dichotomy_samples = DICHOTOMY_SAMPLES;
    v.checks.push(Check::new("dichotomy", probe.red_flags == 0, probe.to_json()));
    v.budgets.blowup_budget = opts.budget;
    let outcome = match search_blowup_with_hints(s, opts.threshold, opts.budget, opts.seed, &probe.flagged) {
        Ok(o) => o,
        Err(e) => {
            v.reason = Some(e.to_string());
            return;
        }
    };
    v.budgets.blowup_evaluations = outcome.evaluations;
    let detail = json!({"best_ratio": real_to_value(outcome.best_ratio), "threshold": real_to_value(opts.threshold)});
    match outcome.witness {
        Some(w) if w.verify(s).is_ok() => {
            v.checks.push(Check::new("blowup", true, detail));
            v.status = Status::Unbounded;
            v.certificate = Some(Certificate::Witness(w));
        }
        _ => {
            v.checks.push(Check::new("blowup", false, detail));
            v.reason = Some(if necessary_failed {
                "necessary condition fails but no witness was found within budget".into()
            } else {
                "no certificate and no witness within budget".into()
            });
        }
    }
}

fn ensure_length(s: &ElOp, tol: &Tolerance, want: usize) -> Result<ElOp> {
    let m = minimal_rep(s, tol);
    if m.term_count() != want {
        return Err(Error::Precondition(format!("operator has length {}, expected {want}", m.term_count())));
    }
    Ok(m)
}

pub fn classify_length2(s: &ElOp, tol: &Tolerance, opts: &Options) -> Result<Verdict> {
    let m = ensure_length(s, tol, 2)?;
    let mut v = Verdict::new(opts.seed);
    v.checks.push(length_check(2, Some(2)));
    let (central, check) = trace_check(&m, tol);
    v.checks.push(check);
    if !central {
        falsify(&mut v, s, tol, opts, true);
        return Ok(v);
    }
    if try_triangular(&mut v, &m, tol, opts) {
        if let Some(Certificate::Triangular { rep, .. }) = &v.certificate {
            v.checks.push(length2_form_check(rep));
        }
        return Ok(v);
    }
    if m.dim() == 2 {
        if let Some(cert) = find_exceptional(&m, tol) {
            let Certificate::Exceptional { lambda, .. } = &cert else { unreachable!() };
            let bound = 2.0 * lambda.norm();
            v.checks.push(Check::new("exceptional", true, json!({"bound": real_to_value(bound)})));
            v.bounded(Form::Exceptional, cert, bound);
            return Ok(v);
        }
        v.checks.push(Check::new("exceptional", false, Value::Null));
    }
    falsify(&mut v, s, tol, opts, false);
    Ok(v)
}

/// `ba`, `dc` scalar and `bc = 0`, reading `(a, b)` from the second term and
/// `(c, d)` from the first term of a triangular representation.
fn length2_form_check(rep: &ElOp) -> Check {
    let (c, d) = &rep.terms()[0];
    let (a, b) = &rep.terms()[1];
    let scale = grid_scale(rep);
    let res = [fro(&(b * a)), fro(&(d * c)), fro(&(b * c))];
    let ok = res.iter().all(|&r| r <= 1e-8 * scale);
    Check::new("length2_form", ok, json!({"ba": res[0], "dc": res[1], "bc": res[2]}))
}

pub fn classify_length3(s: &ElOp, tol: &Tolerance, opts: &Options) -> Result<Verdict> {
    let m = ensure_length(s, tol, 3)?;
    let mut v = Verdict::new(opts.seed);
    v.checks.push(length_check(3, Some(3)));
    let (central, check) = trace_check(&m, tol);
    v.checks.push(check);
    if !central {
        falsify(&mut v, s, tol, opts, true);
        return Ok(v);
    }
    if try_triangular(&mut v, &m, tol, opts) {
        return Ok(v);
    }
    if let Some(cert) = find_grid_form(&m, tol) {
        let Certificate::Grid { form, .. } = &cert else { unreachable!() };
        let form = *form;
        let mut trial = v.clone();
        trial.bounded(form, cert, 0.0);
        let ok = verify_certificate(s, &trial, tol).is_ok();
        v.checks.push(Check::new("grid_form", ok, json!(form.as_str())));
        if ok {
            trial.checks = v.checks;
            return Ok(trial);
        }
    } else {
        v.checks.push(Check::new("grid_form", false, Value::Null));
    }
    falsify(&mut v, s, tol, opts, false);
    if v.status == Status::Undecided && m.dim() <= 3 {
        v.reason = Some("outside theorem hypothesis".into());
    }
    Ok(v)
}

/// Dispatches on the length of `S`.
pub fn classify(s: &ElOp, tol: &Tolerance, opts: &Options) -> Verdict {
    let m = minimal_rep(s, tol);
    match m.term_count() {
        0 => {
            let mut v = Verdict::new(opts.seed);
            v.checks.push(length_check(0, None));
            v.status = Status::Infinitesimal;
            v.bound = Some(0.0);
            v
        }
        1 => {
            let mut v = Verdict::new(opts.seed);
            v.checks.push(length_check(1, None));
            let (central, check) = trace_check(&m, tol);
            v.checks.push(check);
            if central && try_triangular(&mut v, &m, tol, opts) {
                return v;
            }
            falsify(&mut v, s, tol, opts, !central);
            v
        }
        2 => classify_length2(s, tol, opts).expect("length checked"),
        3 => classify_length3(s, tol, opts).expect("length checked"),
        k => {
            let mut v = Verdict::new(opts.seed);
            v.checks.push(length_check(k, None));
            let (central, check) = trace_check(&m, tol);
            v.checks.push(check);
            if !central {
                falsify(&mut v, s, tol, opts, true);
                return v;
            }
            if try_triangular(&mut v, &m, tol, opts) {
                return v;
            }
            falsify(&mut v, s, tol, opts, false);
            v
        }
    }
}

#[derive(Clone, Debug)]
pub struct DichotomyReport {
    pub samples: usize,
    pub skipped: usize,
    pub red_flags: usize,
    pub max_defect: f64,
    /// Inputs `x` whose compressed action was not nilpotent.
    pub flagged: Vec<CMat>,
}

impl DichotomyReport {
    pub fn to_json(&self) -> Value {
        json!({
            "samples": self.samples,
            "skipped": self.skipped,
            "red_flags": self.red_flags,
            "max_defect": real_to_value(self.max_defect),
        })
    }
}

/// Orthonormal basis of the span of `vs`, dropping directions below `cut`.
fn span_above(vs: &[CVec], n: usize, cut: f64) -> Vec<CVec> {
    if vs.is_empty() {
        return Vec::new();
    }
    let m = hstack(vs, n);
    let d = matcore::svd(&m);
    (0..d.s.len()).filter(|&i| d.s[i] > cut).map(|i| d.u.column(i).into_owned()).collect()
}

/// For random `ζ`, builds a rank-one nilpotent `x` with `xζ = 0` and
/// `x V′ζ ⊆ ℂζ`; `L_S ζ` is then invariant under `S(x)`, and for a spectrally
/// bounded `S` the restriction must be nilpotent.
pub fn nilpotency_dichotomy_probe(s: &ElOp, samples: usize, seed: u64, tol: &Tolerance) -> DichotomyReport {
    let n = s.dim();
    let m = minimal_rep(s, tol);
    let grid = product_grid(&m);
    let mut r = rng::labelled(seed, "dichotomy");
    let mut report = DichotomyReport { samples, skipped: 0, red_flags: 0, max_defect: 0.0, flagged: Vec::new() };
    if m.term_count() == 0 {
        return report;
    }
    let gscale = grid_scale(&m);
    let lscale = m.left().map(fro).fold(0.0, f64::max);
    for _ in 0..samples {
        let zeta = rng::gauss_vec(&mut r, n);
        let zeta = &zeta / real(zeta.norm());
        let proj = identity(n) - &zeta * zeta.adjoint();
        let images: Vec<CVec> = grid.entries.iter().flatten().map(|g| &proj * (g * &zeta)).collect();
        let ws = span_above(&images, n, 1e-9 * gscale);
        let mut constraints = vec![(zeta.clone(), CVec::zeros(n))];
        for w in &ws {
            constraints.push((w.clone(), &zeta * rng::gauss(&mut r)));
        }
        let Ok(x) = prescribe(&constraints, n, false) else {
            report.skipped += 1;
            continue;
        };
        let lz: Vec<CVec> = m.left().map(|a| a * &zeta).collect();
        let basis = span_above(&lz, n, 1e-9 * lscale);
        let Ok(sx) = apply(&m, &x) else {
            report.skipped += 1;
            continue;
        };
        let Ok(small) = matcore::matrix_in_basis(&sx, &basis, tol) else {
            report.skipped += 1;
            continue;
        };
        let defect = nilpotency_defect(&small);
        report.max_defect = report.max_defect.max(defect);
        if defect > tol.spec_abs {
            report.red_flags += 1;
            report.flagged.push(x);
        }
    }
    report
}

/// Recombination placing the kernel of a scalar grid `Γ` last and making the
/// induced map on the quotient upper triangular. Returns `(P, T)` with
/// `P⁻¹ΓP = [[T, 0], [*, 0]]`.
pub fn triangularize_scalar_grid(gamma: &CMat, tol: &Tolerance) -> (CMat, CMat) {
    let k = gamma.nrows();
    let kernel = null_space(gamma, tol.rank_rel);
    let q = matcore::complement_basis(&kernel, tol.rank_rel);
    let r = q.ncols();
    let compressed = q.adjoint() * gamma * &q;
    let (u, t) = if r == 0 {
        (CMat::zeros(0, 0), CMat::zeros(0, 0))
    } else {
        matcore::schur_form(&compressed).unwrap_or_else(|_| (identity(r), compressed.clone()))
    };
    let mut p = CMat::zeros(k, k);
    p.view_mut((0, 0), (k, r)).copy_from(&(&q * u));
    p.view_mut((0, r), (k, k - r)).copy_from(&kernel);
    (p, t)
}

/// For operators whose grid entries are all scalar, a recombined
/// representation whose scalar grid is `[[T, 0], [*, 0]]` with `T` upper
/// triangular, and `T`. Fails the precondition otherwise. Also checks that the
/// grid star product is a multiple of the identity map.
pub fn normalize_scalar_v(s: &ElOp, tol: &Tolerance, _seed: u64) -> Result<Option<(ElOp, CMat)>> {
    let m = minimal_rep(s, tol);
    let g = product_grid(&m);
    let k = g.n_terms;
    let mut gamma = CMat::zeros(k, k);
    for i in 0..k {
        for j in 0..k {
            gamma[(i, j)] = scalar_of_identity(g.get(i, j), tol)
                .ok_or_else(|| Error::Precondition(format!("grid entry ({i},{j}) is not scalar")))?;
        }
    }
    let (p, t) = triangularize_scalar_grid(&gamma, tol);
    let rep = recombine(&m, &p.transpose())?;
    let star = superoperator_matrix(&grid_star_product(&product_grid(&rep)));
    let n2 = star.nrows();
    if n2 > 0 && scalar_of_identity(&star, tol).is_none() && fro(&star) > tol.spec_abs {
        return Ok(None);
    }
    Ok(Some((rep, t)))
}

#[derive(Clone, Debug)]
pub struct ConsequenceReport {
    pub checks: Vec<Check>,
    pub red_flags: usize,
}

impl ConsequenceReport {
    pub fn to_json(&self) -> Value {
        json!({"checks": self.checks.iter().map(Check::to_json).collect::<Vec<_>>(), "red_flags": self.red_flags})
    }
}

/// Largest `‖(Sx)^p‖ / ‖Sx‖^p` over seeded probes.
pub fn power_residual(s: &ElOp, p: u32, samples: usize, seed: u64) -> f64 {
    let n = s.dim();
    let mut r = rng::labelled(seed, "power-residual");
    let mut worst: f64 = 0.0;
    for _ in 0..samples {
        let x = rng::gauss_mat(&mut r, n, n);
        let Ok(sx) = apply(s, &x) else { continue };
        let norm = fro(&sx);
        if norm == 0.0 {
            continue;
        }
        worst = worst.max(fro(&mat_pow(&(&sx / real(norm)), p)));
    }
    worst
}

/// `‖S*S‖` as a map, relative to `max(1, ‖S‖²)`.
pub fn star_square_norm(s: &ElOp) -> f64 {
    let ss = compose(&star(s), s).expect("same dimension");
    map_norm(&ss) / map_norm(s).powi(2).max(1.0)
}

/// Distance from `S*S` to `span{id, x ↦ tr(x)I}`, relative to `‖S*S‖`.
fn star_square_span_residual(s: &ElOp) -> f64 {
    let n = s.dim();
    let ss = superoperator_matrix(&compose(&star(s), s).expect("same dimension"));
    let total = fro(&ss);
    if total == 0.0 {
        return 0.0;
    }
    let id = vec_col(&identity(n * n));
    let vi = vec_col(&identity(n));
    let tr = vec_col(&(&vi * vi.transpose()));
    let basis = hstack(&[id, tr], n.pow(4));
    let target = vec_col(&ss);
    let coeffs = basis.clone().pseudo_inverse(1e-12).map(|p| p * &target).unwrap_or_else(|_| CVec::zeros(2));
    (target - basis * coeffs).norm() / total
}

/// Sampled consequences of the verdict: length-two bounded operators have
/// `S*S` in `span{id, x ↦ tr(x)I}` and `[S*Sx, x] = 0`, and on `n ≥ 3`
/// satisfy `(Sx)³ = 0` and `S*S = 0`; bounded length-three operators with
/// zero certified norm satisfy `(Sx)⁵ = 0` and `S*S = 0`.
pub fn consequence_suite(s: &ElOp, v: &Verdict, samples: usize, seed: u64) -> ConsequenceReport {
    let tol = Tolerance::default();
    let len = length(s, &tol);
    let n = s.dim();
    let mut checks = Vec::new();
    let bounded = v.status == Status::Bounded;
    if bounded && len == 2 {
        let res = star_square_span_residual(s);
        checks.push(Check::new("star_square_span", res <= 1e-8, json!(res)));
        let mut r = rng::labelled(seed, "commutator");
        let ss = compose(&star(s), s).expect("same dimension");
        let mut worst: f64 = 0.0;
        for _ in 0..samples {
            let x = rng::gauss_mat(&mut r, n, n);
            let y = apply(&ss, &x).expect("same dimension");
            let scale = (fro(&y) * fro(&x)).max(1e-300);
            worst = worst.max(fro(&matcore::commutator(&y, &x)) / scale);
        }
        checks.push(Check::new("star_square_commutator", worst <= 1e-8, json!(worst)));
        if n >= 3 {
            let cube = power_residual(s, 3, samples, seed);
            checks.push(Check::new("cube_zero", cube <= 1e-8, json!(cube)));
            let ss = star_square_norm(s);
            checks.push(Check::new("star_square_zero", ss <= 1e-9, json!(ss)));
        }
    }
    if len == 3 && v.is_infinitesimal() {
        let fifth = power_residual(s, 5, samples, seed);
        checks.push(Check::new("fifth_power_zero", fifth <= 1e-8, json!(fifth)));
        let ss = star_square_norm(s);
        checks.push(Check::new("star_square_zero", ss <= 1e-9, json!(ss)));
    }
    if v.is_infinitesimal() && len > 0 {
        let ok = crate::specnorm::infinitesimal_probe(s, samples, seed);
        checks.push(Check::new("infinitesimal_probe", ok, json!(samples)));
        let k = fro(&trace_vector(s)) / grid_scale(s).max(1.0);
        checks.push(Check::new("trace_vector_zero", k <= 1e-8, json!(k)));
    }
    let red_flags = checks.iter().filter(|c| !c.pass).count();
    ConsequenceReport { checks, red_flags }
}

/// Local dimensions etc. for reports.
pub fn space_summary(s: &ElOp, tol: &Tolerance, seed: u64) -> Value {
    let sp = spaces(s, tol, 32, seed);
    let d = |o: &elop::OpSpace| json!({"dim": o.dim, "local_dim": o.local_dim});
    json!({
        "left": d(&sp.left),
        "right": d(&sp.right),
        "products": d(&sp.products),
        "products_plus_identity": d(&sp.products_plus_identity),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matcore::unit as e;

    fn tol() -> Tolerance {
        Tolerance::default()
    }

    fn m3_example() -> ElOp {
        ElOp::new(3, vec![(e(3, 0, 0), e(3, 0, 1)), (e(3, 0, 2), e(3, 1, 1))]).unwrap()
    }

    #[test]
    fn trace_central_examples() {
        let (ok, k) = check_trace_central(&ElOp::identity(2), &tol());
        assert!(ok && k == identity(2));
        let s = ElOp::two_sided(e(2, 0, 1), identity(2)).unwrap();
        let (ok, k) = check_trace_central(&s, &tol());
        assert!(!ok && k == e(2, 0, 1));
    }

    #[test]
    fn mult_hom_examples() {
        let mut r = rng::rng(1);
        let u = rng::gauss_mat(&mut r, 3, 3);
        let v = inverse(&u).unwrap();
        assert!(matches!(check_mult_homomorphism(&u, &v, &tol()).unwrap(), HomVerdict::Hom));
        assert!(matches!(check_mult_homomorphism(&e(2, 0, 0), &e(2, 0, 0), &tol()).unwrap(), HomVerdict::NotHom { .. }));
        match check_mult_homomorphism(&e(2, 0, 1), &e(2, 0, 1), &tol()).unwrap() {
            HomVerdict::NotHom { residual, .. } => assert!(residual > 0.5),
            HomVerdict::Hom => panic!("e12 x e12 is not multiplicative"),
        }
        assert!(matches!(check_mult_homomorphism(&CMat::zeros(2, 2), &e(2, 0, 1), &tol()).unwrap(), HomVerdict::Hom));
    }

    #[test]
    fn triangular_examples() {
        let mut r = rng::rng(2);
        let u = rng::gauss_mat(&mut r, 3, 3);
        let v = inverse(&u).unwrap() * C64::new(0.5, 1.0);
        let (_, l) = find_triangular_rep(&ElOp::two_sided(u, v).unwrap(), &tol(), 0, 0).unwrap();
        assert!((l[0] - C64::new(0.5, 1.0)).norm() < 1e-9);
        let (_, l) = find_triangular_rep(&m3_example(), &tol(), 0, 0).unwrap();
        assert_eq!(l, vec![ZERO, ZERO]);
        assert!(find_triangular_rep(&ElOp::two_sided(e(2, 0, 1), identity(2)).unwrap(), &tol(), 0, 0).is_none());
    }

    #[test]
    fn length2_examples() {
        let v = classify_length2(&m3_example(), &tol(), &Options::default()).unwrap();
        assert_eq!(v.status, Status::Bounded);
        assert_eq!(v.form, Some(Form::I));
        assert!(v.checks.iter().any(|c| c.name == "length2_form" && c.pass));

        let s = ElOp::new(2, vec![(e(2, 0, 0), e(2, 0, 0)), (e(2, 0, 1), e(2, 1, 1))]).unwrap();
        let v = classify_length2(&s, &tol(), &Options::default()).unwrap();
        assert_eq!(v.status, Status::Unbounded);
        v.witness().unwrap().verify(&s).unwrap();

        let lambda = C64::new(1.5, -0.5);
        let b = CMat::from_row_slice(2, 2, &[lambda, C64::new(0.3, 0.0), ZERO, C64::new(-1.0, 2.0)]);
        let d = CMat::from_row_slice(2, 2, &[ZERO, C64::new(0.7, 0.1), lambda, C64::new(0.2, 0.0)]);
        let s = ElOp::new(2, vec![(e(2, 0, 0), b), (e(2, 0, 1), d)]).unwrap();
        let v = classify_length2(&s, &tol(), &Options::default()).unwrap();
        assert_eq!(v.status, Status::Bounded);
        assert_eq!(v.form, Some(Form::Exceptional));
        assert!((v.bound.unwrap() - 2.0 * lambda.norm()).abs() < 1e-9);

        assert!(classify_length2(&ElOp::identity(2), &tol(), &Options::default()).is_err());
    }

    #[test]
    fn length3_examples() {
        let terms = (1..4).map(|j| (e(4, 0, j), e(4, j, 1))).collect();
        let s = ElOp::new(4, terms).unwrap();
        let v = classify_length3(&s, &tol(), &Options::default()).unwrap();
        assert_eq!((v.status, v.form), (Status::Bounded, Some(Form::I)));
        assert!(v.is_infinitesimal());
    }

    #[test]
    fn grid_star_product_examples() {
        let mut r = rng::rng(3);
        let n = 4;
        for lambda in [ZERO, C64::new(1.0, 0.0), C64::new(2.0, 0.0), C64::new(1.0, 1.0)] {
            let (z0, z1, f) = (rng::gauss_vec(&mut r, n), rng::gauss_vec(&mut r, n), rng::gauss_vec(&mut r, n));
            let g = form_grid(Form::II, n, lambda, &z0, &z1, &f, &f).unwrap();
            let want = ElOp::new(n, vec![(identity(n) * (lambda * lambda * real(3.0)), identity(n))]).unwrap();
            assert!(probe_distance(&grid_star_product(&g), &want, 20, 0).unwrap() < 1e-8 * (1.0 + lambda.norm_sqr()) * 10.0);
        }
        let z = ProductGrid::new(2, vec![vec![CMat::zeros(2, 2); 2]; 2]).unwrap();
        assert_eq!(map_norm(&grid_star_product(&z)), 0.0);
        let l = C64::new(0.0, 2.0);
        let one = ProductGrid::new(2, vec![vec![identity(2) * l]]).unwrap();
        let x = rng::gauss_mat(&mut r, 2, 2);
        assert!(fro(&(apply(&grid_star_product(&one), &x).unwrap() - &x * (l * l))) < 1e-12);
    }

    #[test]
    fn consequences_of_m3_example() {
        let s = m3_example();
        let v = classify(&s, &tol(), &Options::default());
        let rep = consequence_suite(&s, &v, 100, 0);
        assert_eq!(rep.red_flags, 0, "{:?}", rep.checks);
        assert!(rep.checks.iter().any(|c| c.name == "cube_zero"));
        let v = classify(&ElOp::identity(2), &tol(), &Options::default());
        assert_eq!(consequence_suite(&ElOp::identity(2), &v, 10, 0).red_flags, 0);
    }

    #[test]
    fn dichotomy_examples() {
        let rep = nilpotency_dichotomy_probe(&ElOp::identity(3), 20, 0, &tol());
        assert_eq!(rep.red_flags, 0);
        let rep = nilpotency_dichotomy_probe(&m3_example(), 20, 0, &tol());
        assert_eq!(rep.red_flags, 0);
        let mut r = rng::rng(4);
        let s = ElOp::new(3, (0..2).map(|_| (rng::gauss_mat(&mut r, 3, 3), rng::gauss_mat(&mut r, 3, 3))).collect()).unwrap();
        assert!(nilpotency_dichotomy_probe(&s, 20, 0, &tol()).red_flags > 0);
    }

    #[test]
    fn scalar_grid_normalization() {
        let mut r = rng::rng(5);
        // Rank-two scalar grid on three terms.
        let a = rng::gauss_mat(&mut r, 3, 2);
        let b = rng::gauss_mat(&mut r, 2, 3);
        let gamma = a * b;
        let (p, t) = triangularize_scalar_grid(&gamma, &tol());
        let c = inverse(&p).unwrap() * &gamma * &p;
        assert_eq!(t.nrows(), 2);
        for i in 0..3 {
            assert!(c[(i, 2)].norm() < 1e-9);
        }
        assert!(c[(1, 0)].norm() < 1e-9);
        assert!((c[(0, 0)] - t[(0, 0)]).norm() < 1e-9);

        let u = rng::gauss_mat(&mut r, 3, 3);
        let v = inverse(&u).unwrap() * real(2.0);
        let (_, t) = normalize_scalar_v(&ElOp::two_sided(u, v).unwrap(), &tol(), 0).unwrap().unwrap();
        assert!((t[(0, 0)] - real(2.0)).norm() < 1e-9);
        assert!(normalize_scalar_v(&ElOp::two_sided(e(2, 0, 1), identity(2)).unwrap(), &tol(), 0).is_err());
    }
}
