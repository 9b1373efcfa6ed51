//! Nilpotent subspaces of `M_n(ℂ)`, the Gerstenhaber dimension bound and
//! simultaneous strict triangularization.

use std::collections::HashMap;

use serde::Serialize;

use crate::matcore::{fro, hstack, identity, null_space_below, numeric_rank, vec_col, CMat, CVec, Tolerance, C64, ZERO};
use crate::rng;
use crate::{Error, Result};

/// Words per degree above which the exhaustive trace test gives way to
/// random sampling.
const MAX_WORDS: usize = 200_000;

#[derive(Clone, Debug)]
pub struct MatSpace {
    ambient_dim: usize,
    basis: Vec<CMat>,
}

impl MatSpace {
    /// Fails unless the matrices are `n × n` and linearly independent.
    pub fn new(ambient_dim: usize, basis: Vec<CMat>, tol: &Tolerance) -> Result<Self> {
        for m in &basis {
            if m.nrows() != ambient_dim || m.ncols() != ambient_dim {
                return Err(Error::DimensionMismatch { expected: ambient_dim, got: m.nrows() });
            }
        }
        if !basis.is_empty() {
            let cols: Vec<CVec> = basis.iter().map(vec_col).collect();
            if numeric_rank(&hstack(&cols, ambient_dim * ambient_dim), tol) != basis.len() {
                return Err(Error::DependentVectors);
            }
        }
        Ok(MatSpace { ambient_dim, basis })
    }

    /// All strictly upper triangular matrices.
    pub fn strictly_upper(n: usize) -> Self {
        let mut basis = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                basis.push(crate::matcore::unit(n, i, j));
            }
        }
        MatSpace { ambient_dim: n, basis }
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    pub fn basis(&self) -> &[CMat] {
        &self.basis
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn scale(&self) -> f64 {
        self.basis.iter().map(fro).fold(0.0, f64::max)
    }

    /// `g⁻¹ N g`.
    pub fn conjugate(&self, g: &CMat) -> Result<Self> {
        let gi = crate::matcore::inverse(g)?;
        Ok(MatSpace { ambient_dim: self.ambient_dim, basis: self.basis.iter().map(|m| &gi * m * g).collect() })
    }
}

/// Decides nilpotency of every element of the span via the polarized power
/// traces: for each degree `k ≤ n` and each multiset of basis indices, the sum
/// of `tr(w)` over the words `w` with that content must vanish.
pub fn is_nilpotent_space(space: &MatSpace, tol: &Tolerance) -> bool {
    let n = space.ambient_dim;
    let d = space.dim();
    if d == 0 || n == 0 {
        return true;
    }
    let scale = space.scale();
    let words_fit = (1..=n).all(|k| d.checked_pow(k as u32).is_some_and(|w| w <= MAX_WORDS));
    if !words_fit {
        return sampled_nilpotent(space, tol, 64);
    }
    for k in 1..=n {
        let mut sums: HashMap<Vec<usize>, (C64, usize)> = HashMap::new();
        let mut word = Vec::with_capacity(k);
        collect_traces(&space.basis, &identity(n), k, &mut word, &mut sums);
        let bound = tol.spec_abs * (1.0 + scale).powi(k as i32);
        if sums.values().any(|(s, count)| s.norm() > bound * *count as f64) {
            return false;
        }
    }
    true
}

fn collect_traces(
    basis: &[CMat],
    prefix: &CMat,
    remaining: usize,
    word: &mut Vec<usize>,
    sums: &mut HashMap<Vec<usize>, (C64, usize)>,
) {
    if remaining == 0 {
        let mut key = word.clone();
        key.sort_unstable();
        let e = sums.entry(key).or_insert((ZERO, 0));
        e.0 += prefix.trace();
        e.1 += 1;
        return;
    }
    for (i, m) in basis.iter().enumerate() {
        word.push(i);
        collect_traces(basis, &(prefix * m), remaining - 1, word, sums);
        word.pop();
    }
}

fn sampled_nilpotent(space: &MatSpace, tol: &Tolerance, samples: usize) -> bool {
    let mut r = rng::labelled(0, "nilspace-sample");
    (0..samples).all(|_| {
        let x = random_element(space, &mut r);
        crate::matcore::nilpotency_defect(&x) <= tol.spec_abs
    })
}

pub fn random_element(space: &MatSpace, r: &mut rng::Rng) -> CMat {
    let n = space.ambient_dim;
    space.basis.iter().fold(CMat::zeros(n, n), |acc, m| acc + m * rng::gauss(r))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Gerstenhaber {
    pub is_nilpotent: bool,
    pub dim: usize,
    pub bound: usize,
    pub saturated: bool,
}

pub fn gerstenhaber_check(space: &MatSpace, tol: &Tolerance) -> Gerstenhaber {
    let n = space.ambient_dim;
    let is_nilpotent = is_nilpotent_space(space, tol);
    let dim = space.dim();
    let bound = n * n.saturating_sub(1) / 2;
    Gerstenhaber { is_nilpotent, dim, bound, saturated: is_nilpotent && dim == bound }
}

/// Unitary `P` with `P⁻¹ M P` strictly upper triangular for every `M` in
/// `mats`, built from the chain of common kernels modulo the flag found so
/// far. `None` when the chain stalls before reaching `ℂⁿ`.
pub fn common_flag(n: usize, mats: &[CMat], rel: f64) -> Option<CMat> {
    let scale = mats.iter().map(fro).fold(0.0, f64::max);
    common_flag_scaled(n, mats, rel, scale)
}

/// As [`common_flag`], with kernels cut at `rel · scale` for an external
/// reference `scale`; matrices below the cut count as zero.
pub fn common_flag_scaled(n: usize, mats: &[CMat], rel: f64, scale: f64) -> Option<CMat> {
    if n == 0 {
        return Some(CMat::zeros(0, 0));
    }
    if mats.iter().all(|m| fro(m) <= rel * scale) {
        return Some(identity(n));
    }
    let mut flag: Vec<CVec> = Vec::with_capacity(n);
    while flag.len() < n {
        let q = hstack(&flag, n);
        let proj = identity(n) - &q * q.adjoint();
        let mut stacked = CMat::zeros(mats.len() * n, n);
        for (i, m) in mats.iter().enumerate() {
            stacked.view_mut((i * n, 0), (n, n)).copy_from(&(&proj * m));
        }
        // The cut is relative to the inputs, not to a possibly tiny remainder.
        let kernel = null_space_below(&stacked, rel * scale * (mats.len() * n) as f64);
        // The kernel contains the flag, and its orthonormal columns give
        // singular values near 1 for new directions and near 0 otherwise.
        let pk = &proj * kernel;
        if pk.ncols() == 0 {
            return None;
        }
        let d = crate::matcore::svd(&pk);
        let before = flag.len();
        for (j, &sv) in d.s.iter().enumerate() {
            if sv > 0.5 && flag.len() < n {
                let mut v: CVec = d.u.column(j).into_owned();
                for w in &flag {
                    let c = w.dotc(&v);
                    v -= w * c;
                }
                let norm = v.norm();
                flag.push(v / crate::matcore::real(norm));
            }
        }
        if flag.len() == before {
            return None;
        }
    }
    Some(hstack(&flag, n))
}

/// Strict triangularization of a nilpotent space; `Ok(None)` when the space
/// is nilpotent but no common flag exists.
pub fn triangularize(space: &MatSpace, tol: &Tolerance) -> Result<Option<CMat>> {
    if !is_nilpotent_space(space, tol) {
        return Err(Error::Precondition("space is not nilpotent".into()));
    }
    Ok(common_flag(space.ambient_dim, &space.basis, tol.rank_rel))
}

/// Largest entry on or below the diagonal of `P⁻¹ M P` over the mats.
pub fn flag_residual(p: &CMat, mats: &[CMat]) -> f64 {
    let Ok(pi) = crate::matcore::inverse(p) else { return f64::INFINITY };
    let mut worst: f64 = 0.0;
    for m in mats {
        let c = &pi * m * p;
        for j in 0..c.ncols() {
            for i in j..c.nrows() {
                worst = worst.max(c[(i, j)].norm());
            }
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matcore::{real, unit};

    fn tol() -> Tolerance {
        Tolerance::default()
    }

    #[test]
    fn nilpotency_examples() {
        let s = MatSpace::new(3, vec![unit(3, 0, 1), unit(3, 0, 2)], &tol()).unwrap();
        assert!(is_nilpotent_space(&s, &tol()));
        let s = MatSpace::new(3, vec![unit(3, 0, 0)], &tol()).unwrap();
        assert!(!is_nilpotent_space(&s, &tol()));
        let m = unit(2, 0, 1) + unit(2, 1, 0) * real(1e-3);
        let s = MatSpace::new(2, vec![m], &tol()).unwrap();
        assert!(!is_nilpotent_space(&s, &tol()));
        assert!(MatSpace::new(2, vec![unit(2, 0, 1), unit(2, 0, 1) * real(2.0)], &tol()).is_err());
    }

    #[test]
    fn polarization_catches_non_nilpotent_sums() {
        // e12 and e21 are nilpotent, their sum is not.
        let s = MatSpace::new(2, vec![unit(2, 0, 1), unit(2, 1, 0)], &tol()).unwrap();
        assert!(!is_nilpotent_space(&s, &tol()));
    }

    #[test]
    fn gerstenhaber_examples() {
        let g = gerstenhaber_check(&MatSpace::strictly_upper(4), &tol());
        assert_eq!(g, Gerstenhaber { is_nilpotent: true, dim: 6, bound: 6, saturated: true });
        let s = MatSpace::new(4, vec![unit(4, 0, 1)], &tol()).unwrap();
        assert_eq!(gerstenhaber_check(&s, &tol()), Gerstenhaber { is_nilpotent: true, dim: 1, bound: 6, saturated: false });
        let mut r = rng::rng(3);
        let s = MatSpace::new(3, vec![rng::gauss_mat(&mut r, 3, 3), rng::gauss_mat(&mut r, 3, 3)], &tol()).unwrap();
        let g = gerstenhaber_check(&s, &tol());
        assert!(!g.is_nilpotent && !g.saturated);
    }

    #[test]
    fn triangularize_examples() {
        let s = MatSpace::strictly_upper(3);
        let p = triangularize(&s, &tol()).unwrap().unwrap();
        assert!(flag_residual(&p, s.basis()) <= 1e-9);

        let mut r = rng::rng(4);
        let g = rng::gauss_mat(&mut r, 3, 3);
        let conj = s.conjugate(&g).unwrap();
        let p = triangularize(&conj, &tol()).unwrap().unwrap();
        assert!(flag_residual(&p, conj.basis()) <= 1e-8 * conj.scale());

        let s = MatSpace::new(2, vec![unit(2, 0, 1), unit(2, 1, 0)], &tol()).unwrap();
        assert!(triangularize(&s, &tol()).is_err());
    }

    #[test]
    fn sampled_branch_agrees() {
        let s = MatSpace::strictly_upper(5);
        assert!(sampled_nilpotent(&s, &tol(), 16));
        let mut basis = s.basis().to_vec();
        basis.push(unit(5, 4, 0));
        let s = MatSpace::new(5, basis, &tol()).unwrap();
        assert!(!sampled_nilpotent(&s, &tol(), 16));
    }
}
