//! Dense complex matrix primitives: spectral radius, numeric rank, scalar
//! detection, prescribed-action solves and restricted matrix representations.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::rng;
use crate::{Error, Result};

pub type C64 = num_complex::Complex64;
pub type CMat = DMatrix<C64>;
pub type CVec = DVector<C64>;

pub const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
pub const ONE: C64 = C64 { re: 1.0, im: 0.0 };

/// Numerical cutoffs turning exact "= 0" and "∈ ℂ·I" statements into
/// toleranced predicates.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tolerance {
    /// Relative singular-value cutoff used for every rank decision.
    pub rank_rel: f64,
    /// Relative Frobenius deviation allowed for membership in `ℂ·I`.
    pub scalar_rel: f64,
    /// Eigenvalue cutoff; scaled by `1 + ‖m‖_F` where it is applied.
    pub spec_abs: f64,
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance { rank_rel: 1e-10, scalar_rel: 1e-8, spec_abs: 1e-8 }
    }
}

impl Tolerance {
    pub fn new(rank_rel: f64, scalar_rel: f64, spec_abs: f64) -> Self {
        Tolerance { rank_rel, scalar_rel, spec_abs }
    }

    /// All three cutoffs lie in the open interval (0, 1).
    pub fn is_valid(&self) -> bool {
        [self.rank_rel, self.scalar_rel, self.spec_abs]
            .iter()
            .all(|t| t.is_finite() && *t > 0.0 && *t < 1.0)
    }

    /// Absolute eigenvalue cutoff for `m`.
    pub fn spec_cutoff(&self, m: &CMat) -> f64 {
        self.spec_abs * (1.0 + fro(m))
    }
}

pub fn fro(m: &CMat) -> f64 {
    m.norm()
}

pub fn is_finite(m: &CMat) -> bool {
    m.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

fn ensure_square(m: &CMat) -> Result<usize> {
    if m.nrows() != m.ncols() {
        return Err(Error::NotSquare { rows: m.nrows(), cols: m.ncols() });
    }
    Ok(m.nrows())
}

pub fn identity(n: usize) -> CMat {
    CMat::identity(n, n)
}

/// Matrix unit `e_{ij}` (zero-based indices).
pub fn unit(n: usize, i: usize, j: usize) -> CMat {
    let mut m = CMat::zeros(n, n);
    m[(i, j)] = ONE;
    m
}

pub fn basis_vec(n: usize, i: usize) -> CVec {
    let mut v = CVec::zeros(n);
    v[i] = ONE;
    v
}

pub fn real(x: f64) -> C64 {
    C64::new(x, 0.0)
}

/// Column-major vectorisation: `vec(m)[i + j·rows] = m[(i, j)]`.
pub fn vec_col(m: &CMat) -> CVec {
    CVec::from_column_slice(m.as_slice())
}

pub fn unvec(v: &CVec, rows: usize, cols: usize) -> CMat {
    CMat::from_column_slice(rows, cols, v.as_slice())
}

pub fn kron(a: &CMat, b: &CMat) -> CMat {
    a.kronecker(b)
}

pub fn hstack(cols: &[CVec], rows: usize) -> CMat {
    let mut m = CMat::zeros(rows, cols.len());
    for (j, c) in cols.iter().enumerate() {
        m.set_column(j, c);
    }
    m
}

/// Bilinear (non-conjugating) rank-one product `ζ ⊗ f = ζ fᵀ`.
pub fn outer(zeta: &CVec, f: &CVec) -> CMat {
    zeta * f.transpose()
}

pub fn eigenvalues(m: &CMat) -> Result<Vec<C64>> {
    let n = ensure_square(m)?;
    if n == 0 {
        return Ok(Vec::new());
    }
    if !is_finite(m) {
        return Err(Error::Precondition("non-finite matrix entry".into()));
    }
    let zero_below = (0..n).all(|j| (j + 1..n).all(|i| m[(i, j)] == ZERO));
    let zero_above = (0..n).all(|j| (0..j).all(|i| m[(i, j)] == ZERO));
    if zero_below || zero_above {
        return Ok(m.diagonal().iter().copied().collect());
    }
    if let Some(ev) = m.clone().try_schur(f64::EPSILON, 100 * n).and_then(|s| s.eigenvalues()) {
        return Ok(ev.iter().copied().collect());
    }
    let (_, t) = schur_form(m)?;
    Ok(t.diagonal().iter().copied().collect())
}

/// Unitary `Q` and upper triangular `T` with `m = Q T Qᴴ`.
///
/// The complex QR iteration can stall on near-scalar input. Schur vectors
/// are unchanged by a shift `m − cI` and are carried through a unitary
/// change of basis, so both are tried before giving up.
pub fn schur_form(m: &CMat) -> Result<(CMat, CMat)> {
    let n = ensure_square(m)?;
    if !is_finite(m) {
        return Err(Error::Precondition("non-finite matrix entry".into()));
    }
    let c = if n == 0 { ZERO } else { m.trace() / real(n as f64) };
    let e = m - identity(n) * c;
    let scale = fro(&e);
    if scale == 0.0 {
        return Ok((identity(n), m.clone()));
    }
    let finish = |q: CMat| {
        let mut t = q.adjoint() * m * &q;
        for j in 0..n {
            for i in j + 1..n {
                t[(i, j)] = ZERO;
            }
        }
        (q, t)
    };
    if let Some(q) = schur_vectors(m) {
        return Ok(finish(q));
    }
    let e = e / real(scale);
    if let Some(q) = schur_vectors(&e) {
        return Ok(finish(q));
    }
    let mut r = rng::labelled(n as u64, "eigen-fallback");
    for _ in 0..4 {
        let w = random_unitary(&mut r, n);
        if let Some(q) = schur_vectors(&(w.adjoint() * &e * &w)) {
            return Ok(finish(w * q));
        }
    }
    Err(Error::Precondition("eigensolver did not converge".into()))
}

fn schur_vectors(m: &CMat) -> Option<CMat> {
    Some(m.clone().try_schur(f64::EPSILON, 100 * m.nrows())?.unpack().0)
}

/// Largest eigenvalue modulus, from a dense Schur decomposition.
pub fn spectral_radius(m: &CMat) -> Result<f64> {
    Ok(eigenvalues(m)?.iter().map(|z| z.norm()).fold(0.0, f64::max))
}

/// Worst-case eigenvalue displacement caused by rounding `m` once: a single
/// Jordan block of full size moves its eigenvalue by `(n·ε)^{1/n}·‖m‖`.
pub fn perturbation_floor(m: &CMat) -> f64 {
    let n = m.nrows().max(1) as f64;
    (n * f64::EPSILON).powf(1.0 / n) * fro(m)
}

/// Thin SVD `m = U·diag(s)·Vᴴ`, `s` descending.
#[derive(Clone, Debug)]
pub struct Svd {
    pub u: CMat,
    pub s: Vec<f64>,
    pub vt: CMat,
}

/// SVD with a recomposition check. The bidiagonal QR in nalgebra can return
/// unitary but wrong factors for some structured complex inputs; those are
/// retried on `Q·m·W` for random unitaries `Q`, `W`.
pub fn svd(m: &CMat) -> Svd {
    let (rows, cols) = m.shape();
    let k = rows.min(cols);
    if k == 0 {
        return Svd { u: CMat::zeros(rows, 0), s: Vec::new(), vt: CMat::zeros(0, cols) };
    }
    let norm = fro(m);
    let allowed = 1e-12 * norm * (k as f64).sqrt() + f64::MIN_POSITIVE;
    let mut best = raw_svd(m);
    let mut best_res = recompose_error(m, &best);
    let mut r = rng::labelled((rows * 1000 + cols) as u64, "svd-retry");
    let mut tries = 0;
    while best_res > allowed && tries < 8 {
        tries += 1;
        let q = random_unitary(&mut r, rows);
        let w = random_unitary(&mut r, cols);
        let t = raw_svd(&(&q * m * &w));
        let cand = Svd { u: q.adjoint() * t.u, s: t.s, vt: t.vt * w.adjoint() };
        let res = recompose_error(m, &cand);
        if res < best_res {
            best = cand;
            best_res = res;
        }
    }
    best
}

fn raw_svd(m: &CMat) -> Svd {
    let d = m.clone().svd(true, true);
    let (u, vt) = (d.u.expect("left vectors requested"), d.v_t.expect("right vectors requested"));
    let mut order: Vec<usize> = (0..d.singular_values.len()).collect();
    order.sort_by(|&i, &j| d.singular_values[j].partial_cmp(&d.singular_values[i]).unwrap());
    let mut su = CMat::zeros(u.nrows(), order.len());
    let mut svt = CMat::zeros(order.len(), vt.ncols());
    for (k, &i) in order.iter().enumerate() {
        su.set_column(k, &u.column(i));
        svt.set_row(k, &vt.row(i));
    }
    Svd { u: su, s: order.iter().map(|&i| d.singular_values[i]).collect(), vt: svt }
}

fn recompose_error(m: &CMat, d: &Svd) -> f64 {
    let sigma = CMat::from_diagonal(&CVec::from_iterator(d.s.len(), d.s.iter().map(|&x| real(x))));
    let k = d.s.len();
    let orth = fro(&(d.u.adjoint() * &d.u - identity(k))) + fro(&(&d.vt * d.vt.adjoint() - identity(k)));
    fro(&(&d.u * sigma * &d.vt - m)) + orth * fro(m)
}

pub fn singular_values(m: &CMat) -> Vec<f64> {
    svd(m).s
}

/// Number of singular values above `rank_rel · σ_max · max(rows, cols)`.
pub fn numeric_rank(m: &CMat, tol: &Tolerance) -> usize {
    rank_with(m, tol.rank_rel)
}

pub fn rank_with(m: &CMat, rel: f64) -> usize {
    let s = singular_values(m);
    let Some(&smax) = s.first() else { return 0 };
    if smax == 0.0 {
        return 0;
    }
    let cut = rel * smax * m.nrows().max(m.ncols()) as f64;
    s.iter().filter(|&&x| x > cut).count()
}

/// Returns `λ = tr(m)/n` when `m` is within `scalar_rel` of `λI`.
pub fn scalar_of_identity(m: &CMat, tol: &Tolerance) -> Option<C64> {
    let n = m.nrows();
    if n == 0 || n != m.ncols() {
        return None;
    }
    let lambda = m.trace() / real(n as f64);
    let dev = fro(&(m - identity(n) * lambda));
    (dev <= tol.scalar_rel * fro(m).max(1.0)).then_some(lambda)
}

/// Orthonormal basis (as columns) of an approximate null space of `a`.
pub fn null_space(a: &CMat, rel: f64) -> CMat {
    let smax = singular_values(a).first().copied().unwrap_or(0.0);
    null_space_below(a, rel * smax * a.nrows().max(a.ncols()) as f64)
}

/// Right singular vectors of `a` whose singular value is at most `cut`.
pub fn null_space_below(a: &CMat, cut: f64) -> CMat {
    let cols = a.ncols();
    if cols == 0 {
        return CMat::zeros(0, 0);
    }
    // Zero-padding to at least `cols` rows makes the thin SVD return a full
    // set of right singular vectors.
    let rows = a.nrows().max(cols);
    let mut padded = CMat::zeros(rows, cols);
    padded.view_mut((0, 0), (a.nrows(), cols)).copy_from(a);
    let d = svd(&padded);
    let keep: Vec<usize> = (0..d.s.len()).filter(|&i| d.s[i] <= cut).collect();
    let mut out = CMat::zeros(cols, keep.len());
    for (k, &i) in keep.iter().enumerate() {
        out.set_column(k, &d.vt.row(i).adjoint());
    }
    out
}

/// Orthonormal basis (as columns) of the column space of `m`.
pub fn range_basis(m: &CMat, rel: f64) -> CMat {
    if m.ncols() == 0 || m.nrows() == 0 {
        return CMat::zeros(m.nrows(), 0);
    }
    let d = svd(m);
    let smax = d.s[0];
    if smax == 0.0 {
        return CMat::zeros(m.nrows(), 0);
    }
    let cut = rel * smax * m.nrows().max(m.ncols()) as f64;
    let keep = d.s.iter().filter(|&&x| x > cut).count();
    d.u.columns(0, keep).into_owned()
}

/// Orthonormal basis of the orthogonal complement of the column space of `m`.
pub fn complement_basis(m: &CMat, rel: f64) -> CMat {
    null_space(&m.adjoint(), rel)
}

/// Random unitary from the QR factor of a complex Gaussian matrix.
pub fn random_unitary(r: &mut rng::Rng, n: usize) -> CMat {
    if n == 0 {
        return CMat::zeros(0, 0);
    }
    let g = rng::gauss_mat(r, n, n);
    g.qr().q()
}

pub fn inverse(m: &CMat) -> Result<CMat> {
    ensure_square(m)?;
    m.clone().try_inverse().ok_or(Error::NotInvertible)
}

/// Builds `x` with `x·ζᵢ = ηᵢ` for every constraint `(ζᵢ, ηᵢ)`.
///
/// Directions outside the span of the `ζᵢ` map to zero, or, when an
/// invertible result is requested, onto a random unitary completion of the
/// span of the `ηᵢ` (up to eight seeded attempts).
pub fn prescribe(constraints: &[(CVec, CVec)], n: usize, require_invertible: bool) -> Result<CMat> {
    for (z, h) in constraints {
        if z.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: z.len() });
        }
        if h.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: h.len() });
        }
    }
    let m = constraints.len();
    let tol = Tolerance::default();
    let zs: Vec<CVec> = constraints.iter().map(|(z, _)| z.clone()).collect();
    let hs: Vec<CVec> = constraints.iter().map(|(_, h)| h.clone()).collect();
    let z = hstack(&zs, n);
    let h = hstack(&hs, n);
    if numeric_rank(&z, &tol) != m {
        return Err(Error::DependentVectors);
    }
    let w = complement_basis(&z, tol.rank_rel);
    let mut basis = CMat::zeros(n, n);
    basis.view_mut((0, 0), (n, m)).copy_from(&z);
    basis.view_mut((0, m), (n, n - m)).copy_from(&w);
    let basis_inv = inverse(&basis)?;

    let mut image = CMat::zeros(n, n);
    image.view_mut((0, 0), (n, m)).copy_from(&h);
    if !require_invertible {
        return Ok(image * basis_inv);
    }
    if numeric_rank(&h, &tol) != m {
        return Err(Error::NotInvertible);
    }
    let hc = complement_basis(&h, tol.rank_rel);
    for attempt in 0..8u64 {
        let mut r = rng::rng(rng::indexed_seed(0, "prescribe", attempt));
        let mix = random_unitary(&mut r, n - m);
        image.view_mut((0, m), (n, n - m)).copy_from(&(&hc * mix));
        if numeric_rank(&image, &tol) == n {
            return Ok(&image * &basis_inv);
        }
    }
    Err(Error::NotInvertible)
}

/// Matrix of `y` restricted to the invariant subspace spanned by `basis`.
pub fn matrix_in_basis(y: &CMat, basis: &[CVec], tol: &Tolerance) -> Result<CMat> {
    let n = ensure_square(y)?;
    let k = basis.len();
    if let Some(b) = basis.iter().find(|b| b.len() != n) {
        return Err(Error::DimensionMismatch { expected: n, got: b.len() });
    }
    let b = hstack(basis, n);
    if numeric_rank(&b, tol) != k {
        return Err(Error::DependentVectors);
    }
    let yb = y * &b;
    let pinv = b.clone().pseudo_inverse(0.0).map_err(|e| Error::Precondition(e.to_string()))?;
    let small = &pinv * &yb;
    let residual = fro(&(&yb - &b * &small));
    if residual > tol.scalar_rel * fro(&yb).max(1.0) {
        return Err(Error::NotInvariant { residual });
    }
    Ok(small)
}

/// `‖(m/‖m‖)^n‖_F`: zero exactly when `m` is nilpotent, and robust to
/// rounding where eigenvalues of a defective matrix are not.
pub fn nilpotency_defect(m: &CMat) -> f64 {
    let n = m.nrows();
    let s = fro(m);
    if n == 0 || s == 0.0 {
        return 0.0;
    }
    let unit = m / real(s);
    let mut p = unit.clone();
    for _ in 1..n {
        p = &p * &unit;
    }
    fro(&p)
}

pub fn is_nilpotent(m: &CMat, tol: &Tolerance) -> bool {
    nilpotency_defect(m) <= tol.spec_abs
}

pub fn commutator(x: &CMat, y: &CMat) -> CMat {
    x * y - y * x
}

pub fn mat_pow(m: &CMat, k: u32) -> CMat {
    let mut p = identity(m.nrows());
    for _ in 0..k {
        p = &p * m;
    }
    p
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cm(rows: usize, cols: usize, re: &[f64]) -> CMat {
        CMat::from_row_slice(rows, cols, &re.iter().map(|&x| real(x)).collect::<Vec<_>>())
    }

    #[test]
    fn eigenvalues_of_near_scalar_matrices() {
        // Inputs on which the plain complex QR iteration stalls.
        let mut r = rng::rng(11);
        for _ in 0..20 {
            let m = identity(3) + rng::gauss_mat(&mut r, 3, 3) * real(3e-16);
            let ev = eigenvalues(&m).unwrap();
            assert!(ev.iter().all(|z| (z - ONE).norm() < 1e-14));
        }
    }

    #[test]
    fn spectral_radius_examples() {
        assert_eq!(spectral_radius(&unit(2, 0, 1)).unwrap(), 0.0);
        assert!((spectral_radius(&identity(5)).unwrap() - 1.0).abs() < 1e-14);
        let mut d = CMat::zeros(2, 2);
        d[(0, 0)] = real(2.0);
        d[(1, 1)] = C64::new(0.0, -3.0);
        assert!((spectral_radius(&d).unwrap() - 3.0).abs() < 1e-14);
        assert!(matches!(spectral_radius(&CMat::zeros(2, 3)), Err(Error::NotSquare { .. })));
    }

    #[test]
    fn rank_examples() {
        let tol = Tolerance::default();
        assert_eq!(numeric_rank(&CMat::zeros(3, 3), &tol), 0);
        assert_eq!(numeric_rank(&identity(4), &tol), 4);
        let mut r = rng::rng(11);
        let u = rng::gauss_vec(&mut r, 6);
        let v = rng::gauss_vec(&mut r, 6);
        let m = outer(&u, &v);
        // Oracle: every 2x2 minor of a rank-one matrix vanishes.
        let mut max_minor: f64 = 0.0;
        for i in 0..6 {
            for k in 0..6 {
                for j in 0..6 {
                    for l in 0..6 {
                        let minor = m[(i, j)] * m[(k, l)] - m[(i, l)] * m[(k, j)];
                        max_minor = max_minor.max(minor.norm());
                    }
                }
            }
        }
        assert!(max_minor < 1e-12);
        assert_eq!(numeric_rank(&m, &tol), 1);
    }

    #[test]
    fn scalar_examples() {
        let tol = Tolerance::default();
        let s = scalar_of_identity(&(identity(3) * real(2.5)), &tol).unwrap();
        assert!((s - real(2.5)).norm() < 1e-15);
        assert!(scalar_of_identity(&unit(2, 0, 1), &tol).is_none());
        let near = identity(2) + unit(2, 0, 1) * real(1e-12);
        assert!((scalar_of_identity(&near, &tol).unwrap() - ONE).norm() < 1e-15);
    }

    #[test]
    fn prescribe_examples() {
        let e1 = basis_vec(2, 0);
        let e2 = basis_vec(2, 1);
        let x = prescribe(&[(e1.clone(), &e1 * real(2.0))], 2, true).unwrap();
        assert!((&x * &e1 - &e1 * real(2.0)).norm() < 1e-12);
        assert!(spectral_radius(&x).unwrap() > 0.0);
        assert_eq!(numeric_rank(&x, &Tolerance::default()), 2);

        let x = prescribe(&[(e1.clone(), &e2 * real(0.1)), (e2.clone(), e1.clone())], 2, true).unwrap();
        let want = cm(2, 2, &[0.0, 1.0, 0.1, 0.0]);
        assert!((x - want).norm() < 1e-12);

        let e12 = &e1 + &e2;
        let err = prescribe(&[(e1.clone(), e1.clone()), (e12, e1.clone())], 2, true);
        assert!(matches!(err, Err(Error::NotInvertible)));
        let err = prescribe(&[(e1.clone(), e1.clone()), (e1.clone() * real(2.0), e2.clone())], 2, false);
        assert!(matches!(err, Err(Error::DependentVectors)));
    }

    #[test]
    fn matrix_in_basis_examples() {
        let tol = Tolerance::default();
        let mut d = CMat::zeros(3, 3);
        for i in 0..3 {
            d[(i, i)] = real(i as f64 + 1.0);
        }
        let b = [basis_vec(3, 0), basis_vec(3, 1)];
        let m = matrix_in_basis(&d, &b, &tol).unwrap();
        assert!((m - cm(2, 2, &[1.0, 0.0, 0.0, 2.0])).norm() < 1e-12);
        let m = matrix_in_basis(&unit(3, 0, 1), &b, &tol).unwrap();
        assert!((m - cm(2, 2, &[0.0, 1.0, 0.0, 0.0])).norm() < 1e-12);
        let err = matrix_in_basis(&unit(3, 1, 0), &b[..1], &tol);
        assert!(matches!(err, Err(Error::NotInvariant { .. })));
    }

    #[test]
    fn nilpotency_defect_is_robust() {
        let mut r = rng::rng(3);
        let g = rng::gauss_mat(&mut r, 4, 4);
        let gi = inverse(&g).unwrap();
        let n = CMat::from_fn(4, 4, |i, j| if j > i { rng::gauss(&mut r) } else { ZERO });
        let conj = &g * n * &gi;
        assert!(is_nilpotent(&conj, &Tolerance::default()));
        assert!(!is_nilpotent(&(conj + identity(4) * real(0.05)), &Tolerance::default()));
    }
}
