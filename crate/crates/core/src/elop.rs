//! Elementary operators `S(x) = Σ aᵢ x bᵢ`, their coefficient spaces and
//! product grids.
//!
//! Vectorisation is column-major throughout, so the superoperator matrix of
//! the two-sided multiplication `x ↦ a x b` is `bᵀ ⊗ a`.

use serde::{Deserialize, Serialize};

use crate::matcore::{
    self, fro, hstack, identity, inverse, numeric_rank, range_basis, real, unvec, vec_col, CMat,
    CVec, Tolerance, ZERO,
};
use crate::rng;
use crate::{Error, Result};

/// An ordered list of coefficient pairs `(a, b)` acting on `M_dim(ℂ)`.
///
/// The zero operator is the empty list.
#[derive(Clone, Debug, PartialEq)]
pub struct ElOp {
    dim: usize,
    terms: Vec<(CMat, CMat)>,
}

impl ElOp {
    pub fn new(dim: usize, terms: Vec<(CMat, CMat)>) -> Result<Self> {
        for (a, b) in &terms {
            for m in [a, b] {
                if m.nrows() != dim || m.ncols() != dim {
                    return Err(Error::DimensionMismatch { expected: dim, got: m.nrows().max(m.ncols()) });
                }
                if !matcore::is_finite(m) {
                    return Err(Error::Input { field: "terms".into(), reason: "non-finite entry".into() });
                }
            }
        }
        Ok(ElOp { dim, terms })
    }

    pub fn zero(dim: usize) -> Self {
        ElOp { dim, terms: Vec::new() }
    }

    pub fn identity(dim: usize) -> Self {
        ElOp { dim, terms: vec![(identity(dim), identity(dim))] }
    }

    /// `x ↦ a x b`.
    pub fn two_sided(a: CMat, b: CMat) -> Result<Self> {
        let n = a.nrows();
        ElOp::new(n, vec![(a, b)])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn terms(&self) -> &[(CMat, CMat)] {
        &self.terms
    }

    pub fn term_count(&self) -> usize {
        self.terms.len()
    }

    pub fn left(&self) -> impl Iterator<Item = &CMat> {
        self.terms.iter().map(|(a, _)| a)
    }

    pub fn right(&self) -> impl Iterator<Item = &CMat> {
        self.terms.iter().map(|(_, b)| b)
    }

    /// Largest Frobenius norm among coefficients, at least 1.
    pub fn scale(&self) -> f64 {
        self.terms.iter().map(|(a, b)| fro(a) * fro(b)).fold(1.0, f64::max)
    }
}

pub fn apply(s: &ElOp, x: &CMat) -> Result<CMat> {
    if x.nrows() != s.dim || x.ncols() != s.dim {
        return Err(Error::DimensionMismatch { expected: s.dim, got: x.nrows().max(x.ncols()) });
    }
    let mut out = CMat::zeros(s.dim, s.dim);
    for (a, b) in &s.terms {
        out += a * x * b;
    }
    Ok(out)
}

/// `M` with `M·vec(x) = vec(S x)`, i.e. `Σ bᵢᵀ ⊗ aᵢ`.
pub fn superoperator_matrix(s: &ElOp) -> CMat {
    let n2 = s.dim * s.dim;
    let mut m = CMat::zeros(n2, n2);
    for (a, b) in &s.terms {
        m += matcore::kron(&b.transpose(), a);
    }
    m
}

/// Realignment `Σ vec(aᵢ)·vec(bᵢ)ᵀ`; its rank is the length of `S`.
pub fn realignment(s: &ElOp) -> CMat {
    let n2 = s.dim * s.dim;
    let mut r = CMat::zeros(n2, n2);
    for (a, b) in &s.terms {
        r += vec_col(a) * vec_col(b).transpose();
    }
    r
}

pub fn length(s: &ElOp, tol: &Tolerance) -> usize {
    if s.terms.is_empty() {
        return 0;
    }
    numeric_rank(&realignment(s), tol)
}

/// Equivalent representation with exactly `length(S)` terms, read off the
/// truncated SVD of the realignment matrix. Both coefficient families of the
/// result are linearly independent.
pub fn minimal_rep(s: &ElOp, tol: &Tolerance) -> ElOp {
    let n = s.dim;
    if s.terms.is_empty() {
        return ElOp::zero(n);
    }
    let r = realignment(s);
    let rank = numeric_rank(&r, tol);
    let d = matcore::svd(&r);
    let terms = (0..rank)
        .map(|i| {
            let w = real(d.s[i].sqrt());
            // R = Σ σ u vᴴ = Σ (√σ u)(√σ v̄)ᵀ
            let a = unvec(&(d.u.column(i) * w), n, n);
            let b = unvec(&(d.vt.row(i).transpose() * w), n, n);
            (a, b)
        })
        .collect();
    ElOp { dim: n, terms }
}

pub fn star(s: &ElOp) -> ElOp {
    ElOp { dim: s.dim, terms: s.terms.iter().map(|(a, b)| (b.clone(), a.clone())).collect() }
}

/// `S ∘ T`: `S(T x) = Σ sᵃᵢ tᵃⱼ x tᵇⱼ sᵇᵢ`.
pub fn compose(s: &ElOp, t: &ElOp) -> Result<ElOp> {
    if s.dim != t.dim {
        return Err(Error::DimensionMismatch { expected: s.dim, got: t.dim });
    }
    let mut terms = Vec::with_capacity(s.terms.len() * t.terms.len());
    for (sa, sb) in &s.terms {
        for (ta, tb) in &t.terms {
            terms.push((sa * ta, tb * sb));
        }
    }
    Ok(ElOp { dim: s.dim, terms })
}

/// `Σ bᵢ aᵢ`.
pub fn trace_vector(s: &ElOp) -> CMat {
    let mut k = CMat::zeros(s.dim, s.dim);
    for (a, b) in &s.terms {
        k += b * a;
    }
    k
}

/// Frobenius distance between two operators as maps on `M_n`.
pub fn map_distance(s: &ElOp, t: &ElOp) -> Result<f64> {
    if s.dim != t.dim {
        return Err(Error::DimensionMismatch { expected: s.dim, got: t.dim });
    }
    Ok(fro(&(superoperator_matrix(s) - superoperator_matrix(t))))
}

pub fn map_norm(s: &ElOp) -> f64 {
    fro(&superoperator_matrix(s))
}

/// Largest residual `‖S x − T x‖` over seeded Gaussian probes.
pub fn probe_distance(s: &ElOp, t: &ElOp, probes: usize, seed: u64) -> Result<f64> {
    if s.dim != t.dim {
        return Err(Error::DimensionMismatch { expected: s.dim, got: t.dim });
    }
    let mut r = rng::labelled(seed, "probe-distance");
    let mut worst: f64 = 0.0;
    for _ in 0..probes {
        let x = rng::gauss_mat(&mut r, s.dim, s.dim);
        worst = worst.max(fro(&(apply(s, &x)? - apply(t, &x)?)));
    }
    Ok(worst)
}

/// A finite-dimensional space of `n × n` matrices.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct OpSpace {
    pub ambient_dim: usize,
    /// Frobenius-orthonormal basis.
    #[serde(skip)]
    pub basis: Vec<CMat>,
    pub dim: usize,
    pub local_dim: usize,
    #[serde(skip)]
    pub separating_vector: Option<CVec>,
}

impl OpSpace {
    pub fn from_spanning(ambient_dim: usize, spanning: &[CMat], tol: &Tolerance) -> OpSpace {
        let basis = orthonormal_span(ambient_dim, spanning, tol);
        let dim = basis.len();
        OpSpace { ambient_dim, basis, dim, local_dim: 0, separating_vector: None }
    }

    /// `dim span{m ζ : m ∈ basis}`.
    pub fn dim_at(&self, zeta: &CVec, tol: &Tolerance) -> usize {
        if self.basis.is_empty() {
            return 0;
        }
        let cols: Vec<CVec> = self.basis.iter().map(|m| m * zeta).collect();
        numeric_rank(&hstack(&cols, self.ambient_dim), tol)
    }

    pub fn contains(&self, m: &CMat, tol: &Tolerance) -> bool {
        let mut rest = m.clone();
        for b in &self.basis {
            let c = b.dotc(&rest);
            rest -= b * c;
        }
        fro(&rest) <= tol.scalar_rel * fro(m).max(1.0)
    }
}

/// Frobenius-orthonormal basis of `span(spanning)`.
pub fn orthonormal_span(n: usize, spanning: &[CMat], tol: &Tolerance) -> Vec<CMat> {
    if spanning.is_empty() {
        return Vec::new();
    }
    let cols: Vec<CVec> = spanning.iter().map(vec_col).collect();
    let stacked = hstack(&cols, n * n);
    let basis = range_basis(&stacked, tol.rank_rel);
    (0..basis.ncols()).map(|j| unvec(&basis.column(j).into_owned(), n, n)).collect()
}

/// The coefficient spaces `L_S`, `R_S`, `V_S = span{bᵢaⱼ}` and `V′_S = V_S + ℂI`.
#[derive(Clone, Debug)]
pub struct Spaces {
    pub left: OpSpace,
    pub right: OpSpace,
    pub products: OpSpace,
    pub products_plus_identity: OpSpace,
}

impl Spaces {
    pub fn all(&self) -> [&OpSpace; 4] {
        [&self.left, &self.right, &self.products, &self.products_plus_identity]
    }
}

/// Builds the four coefficient spaces and estimates local dimensions from
/// `trials` seeded Gaussian vectors, capped by `min(dim, n)`. The separating
/// vector is the first sample attaining all four maxima.
pub fn spaces(s: &ElOp, tol: &Tolerance, trials: usize, seed: u64) -> Spaces {
    let n = s.dim;
    let left: Vec<CMat> = s.left().cloned().collect();
    let right: Vec<CMat> = s.right().cloned().collect();
    let mut products = Vec::new();
    for b in s.right() {
        for a in s.left() {
            products.push(b * a);
        }
    }
    let mut with_id = products.clone();
    with_id.push(identity(n));
    let mut out = [
        OpSpace::from_spanning(n, &left, tol),
        OpSpace::from_spanning(n, &right, tol),
        OpSpace::from_spanning(n, &products, tol),
        OpSpace::from_spanning(n, &with_id, tol),
    ];

    let mut r = rng::labelled(seed, "local-dim");
    let samples: Vec<CVec> = (0..trials.max(1)).map(|_| rng::gauss_vec(&mut r, n)).collect();
    let dims: Vec<[usize; 4]> = samples
        .iter()
        .map(|z| {
            let mut d = [0; 4];
            for (k, sp) in out.iter().enumerate() {
                d[k] = sp.dim_at(z, tol).min(sp.dim.min(n));
            }
            d
        })
        .collect();
    let mut best = [0usize; 4];
    for d in &dims {
        for k in 0..4 {
            best[k] = best[k].max(d[k]);
        }
    }
    let sep = dims.iter().position(|d| *d == best).map(|i| samples[i].clone());
    for (k, sp) in out.iter_mut().enumerate() {
        sp.local_dim = best[k];
        sp.separating_vector = sep.clone();
    }
    let [left, right, products, products_plus_identity] = out;
    Spaces { left, right, products, products_plus_identity }
}

/// New terms `uⱼ = Σ C_{jk} a_k`, `vⱼ = Σ (C⁻ᵀ)_{jk} b_k`; the map is unchanged.
pub fn recombine(s: &ElOp, c: &CMat) -> Result<ElOp> {
    let k = s.terms.len();
    if c.nrows() != k || c.ncols() != k {
        return Err(Error::DimensionMismatch { expected: k, got: c.nrows() });
    }
    let c_inv_t = inverse(c)?.transpose();
    let n = s.dim;
    let terms = (0..k)
        .map(|j| {
            let mut u = CMat::zeros(n, n);
            let mut v = CMat::zeros(n, n);
            for (l, (a, b)) in s.terms.iter().enumerate() {
                u += a * c[(j, l)];
                v += b * c_inv_t[(j, l)];
            }
            (u, v)
        })
        .collect();
    Ok(ElOp { dim: n, terms })
}

/// The array `(vᵢ uⱼ)` of a representation `S = Σ M_{uⱼ, vⱼ}`.
#[derive(Clone, Debug, PartialEq)]
pub struct ProductGrid {
    pub n_terms: usize,
    pub ambient_dim: usize,
    pub entries: Vec<Vec<CMat>>,
}

impl ProductGrid {
    pub fn new(ambient_dim: usize, entries: Vec<Vec<CMat>>) -> Result<Self> {
        let k = entries.len();
        for row in &entries {
            if row.len() != k {
                return Err(Error::DimensionMismatch { expected: k, got: row.len() });
            }
            for m in row {
                if m.nrows() != ambient_dim || m.ncols() != ambient_dim {
                    return Err(Error::DimensionMismatch { expected: ambient_dim, got: m.nrows() });
                }
            }
        }
        Ok(ProductGrid { n_terms: k, ambient_dim, entries })
    }

    pub fn get(&self, i: usize, j: usize) -> &CMat {
        &self.entries[i][j]
    }

    /// The `(k·n) × (k·n)` block matrix with blocks `G(i, j)`.
    pub fn block_matrix(&self) -> CMat {
        let (k, n) = (self.n_terms, self.ambient_dim);
        let mut m = CMat::zeros(k * n, k * n);
        for i in 0..k {
            for j in 0..k {
                m.view_mut((i * n, j * n), (n, n)).copy_from(&self.entries[i][j]);
            }
        }
        m
    }

    pub fn diagonal_sum(&self) -> CMat {
        (0..self.n_terms).fold(CMat::zeros(self.ambient_dim, self.ambient_dim), |acc, i| acc + &self.entries[i][i])
    }

    /// Scalar slices `E_{pq}` with `E_{pq}[i][j] = G(i, j)[p][q]`.
    /// A recombination by `C` conjugates every slice by `Cᵀ`.
    pub fn slices(&self) -> Vec<CMat> {
        let (k, n) = (self.n_terms, self.ambient_dim);
        let mut out = Vec::with_capacity(n * n);
        for q in 0..n {
            for p in 0..n {
                out.push(CMat::from_fn(k, k, |i, j| self.entries[i][j][(p, q)]));
            }
        }
        out
    }

    pub fn max_norm(&self) -> f64 {
        self.entries.iter().flatten().map(fro).fold(0.0, f64::max)
    }
}

pub fn product_grid(s: &ElOp) -> ProductGrid {
    let entries = s
        .terms
        .iter()
        .map(|(_, v)| s.terms.iter().map(|(u, _)| v * u).collect())
        .collect();
    ProductGrid { n_terms: s.terms.len(), ambient_dim: s.dim, entries }
}

/// Decides whether `G` is the product grid of some `(u, v)` with coefficients
/// in `M_n`: the block matrix must have rank at most `n`. A returned pair
/// reproduces every block to `1e-8` relative.
pub fn grid_realizable(g: &ProductGrid, tol: &Tolerance) -> Option<(Vec<CMat>, Vec<CMat>)> {
    let (k, n) = (g.n_terms, g.ambient_dim);
    let block = g.block_matrix();
    let rank = numeric_rank(&block, tol);
    if rank > n {
        return None;
    }
    if k == 0 {
        return Some((Vec::new(), Vec::new()));
    }
    let d = matcore::svd(&block);
    // V = [W_ρ Σ^½ | 0], U = [Σ^½ Zᴴ_ρ ; completion rows of Zᴴ]
    let mut vmat = CMat::zeros(k * n, n);
    let mut umat = CMat::zeros(n, k * n);
    for t in 0..n {
        if t < rank {
            let w = real(d.s[t].sqrt());
            vmat.set_column(t, &(d.u.column(t) * w));
            umat.set_row(t, &(d.vt.row(t) * w));
        } else {
            umat.set_row(t, &d.vt.row(t));
        }
    }
    let us: Vec<CMat> = (0..k).map(|j| umat.view((0, j * n), (n, n)).into_owned()).collect();
    let vs: Vec<CMat> = (0..k).map(|i| vmat.view((i * n, 0), (n, n)).into_owned()).collect();
    let scale = g.max_norm().max(1.0);
    for i in 0..k {
        for j in 0..k {
            if fro(&(&vs[i] * &us[j] - g.get(i, j))) > 1e-8 * scale {
                return None;
            }
        }
    }
    Some((us, vs))
}

/// Operator `Σ M_{uⱼ, vⱼ}` from matching coefficient lists.
pub fn from_pairs(n: usize, us: Vec<CMat>, vs: Vec<CMat>) -> Result<ElOp> {
    ElOp::new(n, us.into_iter().zip(vs).collect())
}

/// Drops numerically zero terms.
pub fn strip_zero_terms(s: &ElOp) -> ElOp {
    let terms = s
        .terms
        .iter()
        .filter(|(a, b)| fro(a) * fro(b) > 0.0)
        .cloned()
        .collect();
    ElOp { dim: s.dim, terms }
}

pub fn zero_mat(n: usize) -> CMat {
    CMat::from_element(n, n, ZERO)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matcore::{unit, C64};

    fn random_op(k: usize, n: usize, seed: u64) -> ElOp {
        let mut r = rng::rng(seed);
        let terms = (0..k).map(|_| (rng::gauss_mat(&mut r, n, n), rng::gauss_mat(&mut r, n, n))).collect();
        ElOp::new(n, terms).unwrap()
    }

    fn cm(rows: usize, re: &[f64]) -> CMat {
        CMat::from_row_slice(rows, rows, &re.iter().map(|&x| real(x)).collect::<Vec<_>>())
    }

    #[test]
    fn apply_examples() {
        let x = cm(2, &[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(apply(&ElOp::identity(2), &x).unwrap(), x);
        let s = ElOp::two_sided(unit(2, 0, 0), unit(2, 0, 0)).unwrap();
        assert_eq!(apply(&s, &x).unwrap(), cm(2, &[1.0, 0.0, 0.0, 0.0]));
        let s = ElOp::two_sided(unit(2, 0, 1), identity(2)).unwrap();
        let x = cm(2, &[0.0, 0.01, 100.0, 0.0]);
        assert_eq!(apply(&s, &x).unwrap(), cm(2, &[100.0, 0.0, 0.0, 0.0]));
        assert!(apply(&s, &identity(3)).is_err());
    }

    #[test]
    fn superoperator_examples() {
        assert_eq!(superoperator_matrix(&ElOp::identity(2)), identity(4));
        assert_eq!(superoperator_matrix(&ElOp::zero(3)), CMat::zeros(9, 9));
        let s = random_op(3, 3, 5);
        let mut r = rng::rng(6);
        let x = rng::gauss_mat(&mut r, 3, 3);
        let lhs = superoperator_matrix(&s) * vec_col(&x);
        assert!((lhs - vec_col(&apply(&s, &x).unwrap())).norm() < 1e-10);
    }

    #[test]
    fn length_examples() {
        let tol = Tolerance::default();
        let mut r = rng::rng(7);
        let a = rng::gauss_mat(&mut r, 3, 3);
        let b = rng::gauss_mat(&mut r, 3, 3);
        let c = rng::gauss_mat(&mut r, 3, 3);
        let s = ElOp::new(3, vec![(a.clone(), b), (a, c)]).unwrap();
        assert_eq!(length(&s, &tol), 1);
        assert_eq!(length(&ElOp::zero(3), &tol), 0);
        assert_eq!(length(&random_op(3, 4, 8), &tol), 3);
    }

    #[test]
    fn minimal_rep_collapses_common_left_factor() {
        let tol = Tolerance::default();
        let mut r = rng::rng(9);
        let a = rng::gauss_mat(&mut r, 3, 3);
        let s = ElOp::new(3, vec![(a.clone(), rng::gauss_mat(&mut r, 3, 3)), (a.clone(), rng::gauss_mat(&mut r, 3, 3))]).unwrap();
        let m = minimal_rep(&s, &tol);
        assert_eq!(m.term_count(), 1);
        // a-part proportional to a
        let a1 = &m.terms()[0].0;
        let ratio = a.dotc(a1) / a.dotc(&a);
        assert!(fro(&(a1 - &a * ratio)) < 1e-10 * fro(a1));
        assert!(probe_distance(&s, &m, 20, 1).unwrap() < 1e-9);

        let s = random_op(3, 3, 10);
        assert_eq!(minimal_rep(&s, &tol).term_count(), 3);
    }

    #[test]
    fn star_examples() {
        let s = ElOp::two_sided(unit(2, 0, 1), identity(2)).unwrap();
        assert_eq!(apply(&star(&s), &identity(2)).unwrap(), unit(2, 0, 1));
        let s = random_op(2, 3, 11);
        assert_eq!(star(&star(&s)), s);
    }

    #[test]
    fn compose_examples() {
        let s = random_op(2, 3, 12);
        let t = random_op(3, 3, 13);
        let st = compose(&s, &t).unwrap();
        let want = superoperator_matrix(&s) * superoperator_matrix(&t);
        assert!(fro(&(superoperator_matrix(&st) - want)) < 1e-9);
        assert!(map_distance(&compose(&ElOp::identity(3), &t).unwrap(), &t).unwrap() < 1e-12);
        assert_eq!(map_norm(&compose(&ElOp::zero(3), &t).unwrap()), 0.0);
    }

    #[test]
    fn trace_vector_and_grid() {
        assert_eq!(trace_vector(&ElOp::identity(3)), identity(3));
        let s = ElOp::two_sided(unit(2, 0, 1), identity(2)).unwrap();
        assert_eq!(trace_vector(&s), unit(2, 0, 1));

        let g = product_grid(&ElOp::identity(2));
        assert_eq!(g.n_terms, 1);
        assert_eq!(g.get(0, 0), &identity(2));

        // e11, e12 / e13, e22 on M3: every product of the grid vanishes.
        let s = ElOp::new(3, vec![(unit(3, 0, 0), unit(3, 0, 1)), (unit(3, 0, 2), unit(3, 1, 1))]).unwrap();
        let g = product_grid(&s);
        for i in 0..2 {
            for j in 0..2 {
                assert_eq!(fro(g.get(i, j)), 0.0);
            }
        }
        let s = random_op(3, 3, 14);
        assert!(fro(&(product_grid(&s).diagonal_sum() - trace_vector(&s))) < 1e-12);
    }

    #[test]
    fn spaces_examples() {
        let tol = Tolerance::default();
        let sp = spaces(&ElOp::identity(3), &tol, 8, 0);
        for s in sp.all() {
            assert_eq!((s.dim, s.local_dim), (1, 1));
        }
        let mut r = rng::rng(15);
        let s = ElOp::new(2, vec![(unit(2, 0, 0), rng::gauss_mat(&mut r, 2, 2)), (unit(2, 0, 1), rng::gauss_mat(&mut r, 2, 2))]).unwrap();
        let sp = spaces(&s, &tol, 32, 0);
        assert_eq!(sp.left.dim, 2);
        assert_eq!(sp.left.local_dim, 1);
        let sp = spaces(&random_op(3, 4, 16), &tol, 32, 0);
        assert!(sp.products_plus_identity.dim <= 10);
        assert!(sp.products_plus_identity.local_dim <= 4);
        let z = sp.left.separating_vector.clone().unwrap();
        assert_eq!(sp.left.dim_at(&z, &tol), sp.left.local_dim);
    }

    #[test]
    fn recombine_preserves_map() {
        let s = random_op(3, 3, 17);
        assert!(map_distance(&recombine(&s, &identity(3)).unwrap(), &s).unwrap() < 1e-12);
        let mut p = CMat::zeros(3, 3);
        p[(0, 1)] = C64::new(1.0, 0.0);
        p[(1, 2)] = C64::new(1.0, 0.0);
        p[(2, 0)] = C64::new(1.0, 0.0);
        let perm = recombine(&s, &p).unwrap();
        assert_eq!(perm.terms()[0].0, s.terms()[1].0);
        let mut r = rng::rng(18);
        let c = rng::gauss_mat(&mut r, 3, 3);
        assert!(probe_distance(&recombine(&s, &c).unwrap(), &s, 20, 2).unwrap() < 1e-9);
        assert!(recombine(&s, &CMat::zeros(3, 3)).is_err());
    }

    #[test]
    fn grid_realizable_examples() {
        let tol = Tolerance::default();
        let n = 3;
        let lam = identity(n) * real(2.0);
        let z = CMat::zeros(n, n);
        let diag = ProductGrid::new(n, vec![
            vec![lam.clone(), z.clone(), z.clone()],
            vec![z.clone(), lam.clone(), z.clone()],
            vec![z.clone(), z.clone(), lam.clone()],
        ])
        .unwrap();
        assert!(grid_realizable(&diag, &tol).is_none());
        let zero = ProductGrid::new(n, vec![vec![z.clone(); 2]; 2]).unwrap();
        let (us, vs) = grid_realizable(&zero, &tol).unwrap();
        for v in &vs {
            for u in &us {
                assert!(fro(&(v * u)) < 1e-12);
            }
        }
    }
}
