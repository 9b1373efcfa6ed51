//! Seeded generators for operators with known structure.
//!
//! Each generator also returns the planted representation it was built from,
//! so the defining equations can be re-checked on the output.

use crate::classify::{form_grid, Form};
use crate::elop::{self, grid_realizable, length, probe_distance, product_grid, recombine, ElOp};
use crate::matcore::{fro, identity, inverse, random_unitary, real, scalar_of_identity, CMat, CVec, Tolerance, C64, ZERO};
use crate::rng;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Kind {
    Triangular,
    Length2Good,
    Form2,
    Form3,
    Random,
    UnboundedSeeded,
    ZeroGrid,
}

impl Kind {
    pub const ALL: [Kind; 7] =
        [Kind::Triangular, Kind::Length2Good, Kind::Form2, Kind::Form3, Kind::Random, Kind::UnboundedSeeded, Kind::ZeroGrid];

    pub fn name(self) -> &'static str {
        match self {
            Kind::Triangular => "triangular",
            Kind::Length2Good => "length2-good",
            Kind::Form2 => "form2",
            Kind::Form3 => "form3",
            Kind::Random => "random",
            Kind::UnboundedSeeded => "unbounded-seeded",
            Kind::ZeroGrid => "zero-grid",
        }
    }

    pub fn parse(s: &str) -> Option<Kind> {
        Kind::ALL.into_iter().find(|k| k.name() == s)
    }
}

#[derive(Clone, Debug)]
pub struct Generated {
    pub kind: Kind,
    pub op: ElOp,
    /// Representation with the planted grid, before recombination.
    pub planted: ElOp,
    pub lambdas: Vec<C64>,
}

fn mix(kind: Kind, planted: ElOp, lambdas: Vec<C64>, r: &mut rng::Rng, conjugate: bool) -> Result<Generated> {
    let n = planted.dim();
    let k = planted.term_count();
    let mut planted = planted;
    if conjugate {
        let g = well_conditioned(r, n);
        let gi = inverse(&g)?;
        planted = ElOp::new(n, planted.terms().iter().map(|(a, b)| (&g * a * &gi, &g * b * &gi)).collect())?;
    }
    let mut op = planted.clone();
    if k > 1 {
        let c = well_conditioned(r, k);
        op = recombine(&op, &c)?;
    }
    Ok(Generated { kind, op, planted, lambdas })
}

/// `U · diag(e^{t}) · V` with `t ∈ [−½, ½]`, condition number at most `e`.
pub fn well_conditioned(r: &mut rng::Rng, n: usize) -> CMat {
    let u = random_unitary(r, n);
    let v = random_unitary(r, n);
    let d = CVec::from_fn(n, |_, _| real(rng::uniform(r, -0.5, 0.5).exp()));
    u * CMat::from_diagonal(&d) * v
}

/// `uⱼ` supported on rows `< dⱼ` and `vᵢ` on columns `≥ dᵢ`, with `dⱼ`
/// non-decreasing, so `vᵢuⱼ = 0` exactly whenever `dᵢ ≥ dⱼ`.
fn staircase(r: &mut rng::Rng, n: usize, cuts: &[usize]) -> Vec<(CMat, CMat)> {
    cuts.iter()
        .map(|&d| {
            let u = CMat::from_fn(n, n, |i, _| if i < d { rng::gauss(r) } else { ZERO });
            let v = CMat::from_fn(n, n, |_, j| if j >= d { rng::gauss(r) } else { ZERO });
            (u, v)
        })
        .collect()
}

/// Triangular grid operator. One term: `M_{g, λg⁻¹}` with `λ ∈ [0, 3]`.
/// Several terms: a strictly triangular grid with exact zeros (all `λᵢ = 0`),
/// left in its planted basis so `S(x)` is exactly strictly upper triangular.
pub fn triangular(n: usize, k: usize, seed: u64) -> Result<Generated> {
    check_n(n, 2)?;
    if k == 0 || k > n {
        return Err(Error::Precondition(format!("triangular needs 1 ≤ k ≤ n, got k = {k}")));
    }
    let mut r = rng::labelled(seed, "gen-triangular");
    if k == 1 {
        let lambda = real(rng::uniform(&mut r, 0.0, 3.0));
        let g = well_conditioned(&mut r, n);
        let v = inverse(&g)? * lambda;
        let op = ElOp::two_sided(g, v)?;
        return Ok(Generated { kind: Kind::Triangular, op: op.clone(), planted: op, lambdas: vec![lambda] });
    }
    let cuts: Vec<usize> = (0..k).map(|j| (j + 1).min(n - 1)).collect();
    let op = ElOp::new(n, staircase(&mut r, n, &cuts))?;
    Ok(Generated { kind: Kind::Triangular, op: op.clone(), planted: op, lambdas: vec![ZERO; k] })
}

/// Two terms with `ba = dc = bc = 0`, conjugated and recombined.
pub fn length2_good(n: usize, seed: u64) -> Result<Generated> {
    check_n(n, 2)?;
    let mut r = rng::labelled(seed, "gen-length2");
    let planted = ElOp::new(n, staircase(&mut r, n, &[1, (2).min(n - 1)]))?;
    mix(Kind::Length2Good, planted, vec![ZERO; 2], &mut r, true)
}

/// Three-term `λ = 0` grid of form (ii) or (iii), realized in `M_n`.
pub fn form_op(form: Form, n: usize, seed: u64) -> Result<Generated> {
    if n < 4 {
        return Err(Error::Precondition(format!("form{} requires n ≥ 4", if form == Form::II { 2 } else { 3 })));
    }
    let kind = match form {
        Form::II => Kind::Form2,
        Form::III => Kind::Form3,
        _ => return Err(Error::Precondition("form must be ii or iii".into())),
    };
    let tol = Tolerance::default();
    let mut r = rng::labelled(seed, kind.name());
    for _ in 0..8 {
        let z0 = rng::gauss_vec(&mut r, n);
        let z1 = rng::gauss_vec(&mut r, n);
        let f = rng::gauss_vec(&mut r, n);
        let g = rng::gauss_vec(&mut r, n);
        let grid = form_grid(form, n, ZERO, &z0, &z1, &f, &g)?;
        let Some((us, vs)) = grid_realizable(&grid, &tol) else { continue };
        let planted = elop::from_pairs(n, us, vs)?;
        if length(&planted, &tol) != 3 {
            continue;
        }
        return mix(kind, planted, vec![ZERO; 3], &mut r, true);
    }
    Err(Error::Precondition("could not realize a length-3 grid".into()))
}

/// Conjugates and recombines a generated operator; the planted grid is
/// conjugated along with it.
pub fn disguise(g: Generated, seed: u64) -> Result<Generated> {
    let mut r = rng::labelled(seed, "gen-disguise");
    mix(g.kind, g.planted, g.lambdas, &mut r, true)
}

pub fn random(k: usize, n: usize, seed: u64) -> Result<Generated> {
    check_n(n, 1)?;
    let mut r = rng::labelled(seed, "gen-random");
    let terms = (0..k).map(|_| (rng::gauss_mat(&mut r, n, n), rng::gauss_mat(&mut r, n, n))).collect();
    let op = ElOp::new(n, terms)?;
    Ok(Generated { kind: Kind::Random, op: op.clone(), planted: op, lambdas: Vec::new() })
}

/// Random operator of length `k` whose trace vector is not scalar.
pub fn unbounded_seeded(n: usize, k: usize, seed: u64) -> Result<Generated> {
    check_n(n, 2)?;
    if k == 0 {
        return Err(Error::Precondition("unbounded-seeded needs k ≥ 1".into()));
    }
    let tol = Tolerance::default();
    for attempt in 0..16 {
        let mut g = random(k, n, rng::indexed_seed(seed, "gen-unbounded", attempt))?;
        let kv = elop::trace_vector(&g.op);
        if scalar_of_identity(&kv, &tol).is_none() && length(&g.op, &tol) == k.min(n * n) {
            g.kind = Kind::UnboundedSeeded;
            return Ok(g);
        }
    }
    Err(Error::Precondition("could not draw an operator with non-scalar trace vector".into()))
}

/// All products `vᵢuⱼ` exactly zero: `u` on the first `⌊n/2⌋` rows, `v` on
/// the remaining columns.
pub fn zero_grid(n: usize, k: usize, seed: u64) -> Result<Generated> {
    check_n(n, 2)?;
    let m = n / 2;
    if k == 0 || k > m * n {
        return Err(Error::Precondition(format!("zero-grid needs 1 ≤ k ≤ {}", m * n)));
    }
    let mut r = rng::labelled(seed, "gen-zero-grid");
    let op = ElOp::new(n, staircase(&mut r, n, &vec![m; k]))?;
    Ok(Generated { kind: Kind::ZeroGrid, op: op.clone(), planted: op, lambdas: vec![ZERO; k] })
}

fn check_n(n: usize, min: usize) -> Result<()> {
    if n < min {
        return Err(Error::Precondition(format!("requires n ≥ {min}")));
    }
    Ok(())
}

/// Dispatch by kind; `k` defaults to 3 for `random`/`unbounded-seeded`/
/// `zero-grid` and to 1 for `triangular`.
pub fn generate(kind: Kind, n: usize, k: Option<usize>, seed: u64) -> Result<Generated> {
    match kind {
        Kind::Triangular => triangular(n, k.unwrap_or(1), seed),
        Kind::Length2Good => length2_good(n, seed),
        Kind::Form2 => form_op(Form::II, n, seed),
        Kind::Form3 => form_op(Form::III, n, seed),
        Kind::Random => random(k.unwrap_or(3), n, seed),
        Kind::UnboundedSeeded => unbounded_seeded(n, k.unwrap_or(3), seed),
        Kind::ZeroGrid => zero_grid(n, k.unwrap_or(3), seed),
    }
}

/// Checks the defining equations of a generated operator to `1e-9`.
pub fn verify_structure(g: &Generated) -> std::result::Result<(), String> {
    let n = g.op.dim();
    let d = probe_distance(&g.op, &g.planted, 10, 0).map_err(|e| e.to_string())?;
    let scale = elop::map_norm(&g.planted).max(1.0);
    if d > 1e-9 * scale {
        return Err(format!("operator differs from its planted representation by {d:.3e}"));
    }
    let grid = product_grid(&g.planted);
    let k = grid.n_terms;
    let gscale = g.planted.terms().iter().map(|(a, b)| fro(a) * fro(b)).fold(1.0, f64::max);
    let small = |m: &CMat| fro(m) <= 1e-9 * gscale;
    match g.kind {
        Kind::Triangular | Kind::Length2Good => {
            for i in 0..k {
                if fro(&(grid.get(i, i) - identity(n) * g.lambdas[i])) > 1e-9 * gscale {
                    return Err(format!("diagonal entry {i} is not λI"));
                }
                for j in 0..i {
                    if !small(grid.get(i, j)) {
                        return Err(format!("grid entry ({i},{j}) is not zero"));
                    }
                }
            }
        }
        Kind::ZeroGrid => {
            if !grid.entries.iter().flatten().all(small) {
                return Err("grid is not zero".into());
            }
        }
        Kind::Form2 | Kind::Form3 => {
            let x = grid.get(0, 1);
            let y = grid.get(1, 0);
            let ok = small(&(grid.get(1, 2) - x))
                && small(&(grid.get(2, 1) + y))
                && [(0, 0), (0, 2), (1, 1), (2, 0), (2, 2)].iter().all(|&(i, j)| small(grid.get(i, j)));
            if !ok {
                return Err("grid does not match the three-term pattern".into());
            }
            let (tall, wide) = if g.kind == Kind::Form2 {
                (stack(x, y), true)
            } else {
                (side_by_side(x, y), false)
            };
            let s = crate::matcore::singular_values(&tall);
            if s.len() > 1 && s[1] > 1e-9 * s[0] {
                return Err(format!("{} factor is not rank one", if wide { "column" } else { "row" }));
            }
        }
        Kind::UnboundedSeeded => {
            if scalar_of_identity(&elop::trace_vector(&g.op), &Tolerance::default()).is_some() {
                return Err("trace vector is scalar".into());
            }
        }
        Kind::Random => {}
    }
    Ok(())
}

fn stack(x: &CMat, y: &CMat) -> CMat {
    let (r, c) = x.shape();
    let mut out = CMat::zeros(2 * r, c);
    out.view_mut((0, 0), (r, c)).copy_from(x);
    out.view_mut((r, 0), (r, c)).copy_from(y);
    out
}

fn side_by_side(x: &CMat, y: &CMat) -> CMat {
    let (r, c) = x.shape();
    let mut out = CMat::zeros(r, 2 * c);
    out.view_mut((0, 0), (r, c)).copy_from(x);
    out.view_mut((0, c), (r, c)).copy_from(y);
    out
}
