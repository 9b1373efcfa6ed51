//! Spectral ratios `r(Sx)/r(x)`, lower bounds for the spectral norm and
//! searches for blowup witnesses.
//!
//! Eigenvalues of defective matrices are only accurate to about
//! `(nε)^{1/n}‖m‖`, so every ratio used as evidence must clear that floor;
//! see [`matcore::perturbation_floor`](crate::matcore::perturbation_floor).
//! The deterministic families know `r(x)` in closed form and check the
//! computed value against it.

use crate::elop::{apply, product_grid, trace_vector, ElOp};
use crate::matcore::{
    self, complement_basis, fro, hstack, identity, inverse, nilpotency_defect, perturbation_floor, prescribe, real,
    scalar_of_identity, spectral_radius, CMat, CVec, Tolerance, C64,
};
use crate::rng;
use crate::{Error, Result};

/// Evaluations per random restart.
const CHUNK: usize = 1000;
/// `k = 2, 4, …, 2^K_STEPS` in the orbit family.
const K_STEPS: u32 = 16;
/// Random `ζ` tried by the orbit family after the standard basis.
const ORBIT_RANDOM: usize = 4;
const MAX_WITNESS_LEN: usize = 24;
/// Margin over the perturbation floor required of measured radii.
const FLOOR_MARGIN: f64 = 4.0;

#[derive(Clone, Debug, PartialEq)]
pub enum Construction {
    Random,
    /// Orbit around `zeta` with `image = Kζ`.
    Orbit { zeta: CVec, image: CVec },
    DeterministicFamily,
}

impl Construction {
    pub fn tag(&self) -> &'static str {
        match self {
            Construction::Random => "random",
            Construction::Orbit { .. } => "orbit",
            Construction::DeterministicFamily => "deterministic_family",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BlowupWitness {
    pub xs: Vec<CMat>,
    pub ratios: Vec<f64>,
    pub threshold: f64,
    pub construction: Construction,
    pub seed: u64,
}

impl BlowupWitness {
    pub fn last_ratio(&self) -> f64 {
        self.ratios.last().copied().unwrap_or(0.0)
    }

    /// Recomputes every ratio and checks the list invariants.
    pub fn verify(&self, s: &ElOp) -> std::result::Result<(), String> {
        if self.xs.is_empty() || self.xs.len() != self.ratios.len() {
            return Err("empty or misaligned witness".into());
        }
        if self.ratios.windows(2).any(|w| w[1] <= w[0]) {
            return Err("ratios not strictly increasing".into());
        }
        if self.last_ratio() < self.threshold {
            return Err(format!("last ratio {} below threshold {}", self.last_ratio(), self.threshold));
        }
        for (i, (x, &want)) in self.xs.iter().zip(&self.ratios).enumerate() {
            let got = ratio(s, x).map_err(|e| e.to_string())?.ok_or_else(|| format!("xs[{i}] is quasi-nilpotent"))?;
            if (got - want).abs() > 1e-6 * want.abs().max(1e-300) {
                return Err(format!("xs[{i}]: ratio {got} differs from recorded {want}"));
            }
        }
        Ok(())
    }
}

/// `r(Sx)/r(x)`, or `None` when `r(x) ≤ spec_abs`.
pub fn ratio(s: &ElOp, x: &CMat) -> Result<Option<f64>> {
    let sx = apply(s, x)?;
    let rx = spectral_radius(x)?;
    if rx <= Tolerance::default().spec_abs {
        return Ok(None);
    }
    Ok(Some(spectral_radius(&sx)? / rx))
}

/// Ratio whose numerator and denominator both clear the perturbation floor.
/// An unresolved numerator scores zero.
fn floor_ratio(s: &ElOp, x: &CMat) -> Option<f64> {
    let rx = spectral_radius(x).ok()?;
    if rx <= Tolerance::default().spec_abs || rx < 10.0 * FLOOR_MARGIN * perturbation_floor(x) {
        return None;
    }
    let sx = apply(s, x).ok()?;
    let rsx = spectral_radius(&sx).ok()?;
    if rsx < 10.0 * FLOOR_MARGIN * perturbation_floor(&sx) {
        return Some(0.0);
    }
    Some(rsx / rx)
}

/// Ratio for inputs with known `r(x)`: the computed radius must agree to
/// relative `1e-6` and the numerator must clear the floor.
fn known_ratio(s: &ElOp, x: &CMat, r_known: f64) -> Option<f64> {
    let rx = spectral_radius(x).ok()?;
    if rx <= Tolerance::default().spec_abs || (rx - r_known).abs() > 1e-6 * r_known {
        return None;
    }
    let sx = apply(s, x).ok()?;
    let rsx = spectral_radius(&sx).ok()?;
    if rsx < FLOOR_MARGIN * perturbation_floor(&sx) {
        return None;
    }
    Some(rsx / rx)
}

/// A ratio is stable if two relative `1e-10` perturbations of `x` move it by
/// less than `1e-4` relative; rounding error is then negligible.
fn stable(s: &ElOp, x: &CMat, value: f64, r: &mut rng::Rng) -> bool {
    let n = x.nrows();
    let scale = fro(x);
    (0..2).all(|_| {
        let e = rng::gauss_mat(r, n, n);
        let xp = x + &e * real(1e-10 * scale / fro(&e));
        matches!(floor_ratio(s, &xp), Some(v) if (v - value).abs() <= 1e-4 * value)
    })
}

#[derive(Clone, Debug)]
struct Track {
    xs: Vec<CMat>,
    ratios: Vec<f64>,
}

impl Track {
    fn new() -> Self {
        Track { xs: Vec::new(), ratios: Vec::new() }
    }

    fn best(&self) -> f64 {
        self.ratios.last().copied().unwrap_or(0.0)
    }

    fn push(&mut self, x: CMat, v: f64) -> bool {
        if v > self.best() {
            self.xs.push(x);
            self.ratios.push(v);
            true
        } else {
            false
        }
    }

    fn into_witness(mut self, threshold: f64, construction: Construction, seed: u64) -> BlowupWitness {
        if self.xs.len() > MAX_WITNESS_LEN {
            let cut = self.xs.len() - MAX_WITNESS_LEN;
            self.xs.drain(..cut);
            self.ratios.drain(..cut);
        }
        BlowupWitness { xs: self.xs, ratios: self.ratios, threshold, construction, seed }
    }
}

/// Result of a full search: best reliable ratio seen, and a witness when the
/// threshold was crossed.
#[derive(Clone, Debug)]
pub struct SearchOutcome {
    pub best_ratio: f64,
    pub best_x: CMat,
    pub witness: Option<BlowupWitness>,
    pub evaluations: usize,
}

struct Budget {
    total: usize,
    used: usize,
}

impl Budget {
    fn take(&mut self) -> bool {
        if self.used < self.total {
            self.used += 1;
            true
        } else {
            false
        }
    }
}

struct Best {
    ratio: f64,
    x: CMat,
}

impl Best {
    fn offer(&mut self, x: &CMat, v: f64) {
        if v > self.ratio {
            self.ratio = v;
            self.x = x.clone();
        }
    }
}

/// Lower bound on `‖S‖_σ` and the input attaining it. Never an upper bound.
pub fn estimate_spectral_norm(s: &ElOp, budget: usize, seed: u64) -> (f64, CMat) {
    let out = run_search(s, f64::INFINITY, budget.max(1), seed, &[]);
    (out.best_ratio, out.best_x)
}

/// Searches for inputs whose spectral ratio reaches `threshold`.
pub fn search_blowup(s: &ElOp, threshold: f64, budget: usize, seed: u64) -> Result<Option<BlowupWitness>> {
    Ok(search_blowup_with_hints(s, threshold, budget, seed, &[])?.witness)
}

/// As [`search_blowup`], additionally trying nilpotent `hints` whose images
/// under `S` are not nilpotent.
pub fn search_blowup_with_hints(
    s: &ElOp,
    threshold: f64,
    budget: usize,
    seed: u64,
    hints: &[CMat],
) -> Result<SearchOutcome> {
    if !(threshold > 0.0) || threshold.is_nan() {
        return Err(Error::Precondition(format!("threshold must be positive, got {threshold}")));
    }
    Ok(run_search(s, threshold, budget, seed, hints))
}

fn run_search(s: &ElOp, threshold: f64, budget: usize, seed: u64, hints: &[CMat]) -> SearchOutcome {
    let n = s.dim();
    let mut budget = Budget { total: budget, used: 0 };
    let mut best = Best { ratio: 0.0, x: identity(n) };
    let finish = |best: Best, witness, used| SearchOutcome { best_ratio: best.ratio, best_x: best.x, witness, evaluations: used };

    if n == 0 || s.term_count() == 0 {
        return finish(best, None, 0);
    }
    if let Some(w) = orbit_stage(s, threshold, &mut budget, &mut best, seed) {
        return finish(best, Some(w), budget.used);
    }
    if let Some(w) = family_stage(s, threshold, &mut budget, &mut best, seed, hints) {
        return finish(best, Some(w), budget.used);
    }
    let remaining = budget.total - budget.used;
    let restarts = remaining.div_ceil(CHUNK);
    let results = run_restarts(s, threshold, seed, restarts, remaining);
    let mut witness: Option<(f64, BlowupWitness)> = None;
    for r in results {
        budget.used += r.used;
        best.offer(&r.best_x, r.best);
        if let Some(w) = r.witness {
            let v = w.last_ratio();
            if witness.as_ref().is_none_or(|(bv, _)| v > *bv) {
                witness = Some((v, w));
            }
        }
    }
    finish(best, witness.map(|(_, w)| w), budget.used)
}

/// Orbit family `x_k = g_k y g_k⁻¹` around a vector `ζ` with `Kζ ∉ ℂζ`,
/// `K = Σ bᵢaᵢ`: `y` swaps `ζ` and `w = Kζ`, `g_k` scales `ζ` by `k`.
/// Then `r(x_k) = 1` while `tr(S x_k) = tr(x_k K)` grows like `k`.
fn orbit_stage(s: &ElOp, threshold: f64, budget: &mut Budget, best: &mut Best, seed: u64) -> Option<BlowupWitness> {
    let n = s.dim();
    let k_mat = trace_vector(s);
    let tol = Tolerance::default();
    if n < 2 || scalar_of_identity(&k_mat, &tol).is_some() {
        return None;
    }
    let mut r = rng::labelled(seed, "orbit");
    let mut zetas: Vec<CVec> = (0..n).map(|i| matcore::basis_vec(n, i)).collect();
    zetas.extend((0..ORBIT_RANDOM).map(|_| rng::gauss_vec(&mut r, n)));
    let kn = fro(&k_mat);
    for zeta in zetas {
        let w = &k_mat * &zeta;
        let along = zeta.dotc(&w) / zeta.dotc(&zeta);
        if (&w - &zeta * along).norm() <= 1e-6 * kn * zeta.norm() {
            continue;
        }
        let Some(family) = orbit_family(&zeta, &w) else { continue };
        let mut track = Track::new();
        for (_, x) in family {
            if !budget.take() {
                return None;
            }
            let Some(v) = known_ratio(s, &x, 1.0) else { continue };
            best.offer(&x, v);
            track.push(x, v);
            if track.best() >= threshold {
                let c = Construction::Orbit { zeta: zeta.clone(), image: w.clone() };
                return Some(track.into_witness(threshold, c, seed));
            }
        }
    }
    None
}

/// `(k, x_k)` for `k = 2, 4, …, 2^16`.
pub fn orbit_family(zeta: &CVec, w: &CVec) -> Option<Vec<(f64, CMat)>> {
    let n = zeta.len();
    let y = prescribe(&[(w.clone(), zeta.clone()), (zeta.clone(), w.clone())], n, false).ok()?;
    let pair = hstack(&[zeta.clone(), w.clone()], n);
    let rest = complement_basis(&pair, Tolerance::default().rank_rel);
    let mut basis = CMat::zeros(n, n);
    basis.set_column(0, zeta);
    basis.set_column(1, w);
    basis.view_mut((0, 2), (n, n - 2)).copy_from(&rest);
    let dual = inverse(&basis).ok()?.row(0).transpose();
    let proj = zeta * dual.transpose();
    let id = identity(n);
    Some(
        (1..=K_STEPS)
            .map(|e| {
                let k = f64::from(1u32 << e);
                let g = &id + &proj * real(k - 1.0);
                let gi = &id + &proj * real(1.0 / k - 1.0);
                (k, g * &y * gi)
            })
            .collect(),
    )
}

/// Rank-one nilpotents `z = ζφᵀ`, `φᵀζ = 0`. The nonzero spectrum of `Sz`
/// is that of `Φ = (φᵀ bᵢ aⱼ ζ)`; when `Φ` is not nilpotent the inputs
/// `ζ(φ + εζ̂)ᵀ`, with `r = ε`, have ratios growing like `1/ε`.
fn family_stage(
    s: &ElOp,
    threshold: f64,
    budget: &mut Budget,
    best: &mut Best,
    seed: u64,
    hints: &[CMat],
) -> Option<BlowupWitness> {
    let n = s.dim();
    if n < 2 {
        return None;
    }
    let grid = product_grid(s);
    let mut r = rng::labelled(seed, "family");
    let mut pairs: Vec<(CVec, CVec)> = Vec::new();
    for h in hints {
        if let Some(p) = rank_one_nilpotent(h) {
            pairs.push(p);
        }
    }
    for _ in 0..2 * n {
        let zeta = unit(rng::gauss_vec(&mut r, n));
        let phi = rng::gauss_vec(&mut r, n);
        let phi = &phi - zeta.conjugate() * (phi.dot(&zeta) / zeta.dotc(&zeta));
        pairs.push((zeta, unit(phi)));
    }
    for (zeta, phi) in pairs {
        let k = grid.n_terms;
        let phi_mat = CMat::from_fn(k, k, |i, j| (phi.transpose() * grid.get(i, j) * &zeta)[(0, 0)]);
        let rho = spectral_radius(&phi_mat).ok()?;
        if rho < 1e3 * perturbation_floor(&phi_mat).max(f64::MIN_POSITIVE) || nilpotency_defect(&phi_mat) < 1e-6 {
            continue;
        }
        let hat = zeta.conjugate() / zeta.dotc(&zeta);
        let mut track = Track::new();
        for m in 1..=40 {
            let eps = rho * 0.5f64.powi(m);
            if eps < 1e-7 {
                break;
            }
            if !budget.take() {
                return None;
            }
            let x = &zeta * (&phi + &hat * real(eps)).transpose();
            let Some(v) = known_ratio(s, &x, eps) else { break };
            best.offer(&x, v);
            track.push(x, v);
            if track.best() >= threshold {
                return Some(track.into_witness(threshold, Construction::DeterministicFamily, seed));
            }
        }
    }
    None
}

fn unit(v: CVec) -> CVec {
    let n = v.norm();
    v / real(n)
}

/// `(ζ, φ)` with `h ≈ ζφᵀ` and `φᵀζ ≈ 0`, when `h` is numerically rank one.
fn rank_one_nilpotent(h: &CMat) -> Option<(CVec, CVec)> {
    let d = matcore::svd(h);
    let s0 = *d.s.first()?;
    if s0 == 0.0 || d.s.get(1).is_some_and(|&s1| s1 > 1e-9 * s0) {
        return None;
    }
    let zeta: CVec = d.u.column(0).into_owned();
    let phi: CVec = d.vt.row(0).transpose();
    if phi.dot(&zeta).norm() > 1e-9 {
        return None;
    }
    Some((zeta, phi))
}

struct RestartResult {
    best: f64,
    best_x: CMat,
    witness: Option<BlowupWitness>,
    used: usize,
}

fn thread_cap() -> usize {
    if cfg!(target_arch = "wasm32") {
        return 1;
    }
    std::env::var("SPECBOUND_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .filter(|&t| t > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |p| p.get()))
}

/// Runs restarts `0..count` with budgets `CHUNK` (the last one truncated),
/// in parallel up to the thread cap. Results come back in restart order.
fn run_restarts(s: &ElOp, threshold: f64, seed: u64, count: usize, remaining: usize) -> Vec<RestartResult> {
    let budget_of = |i: usize| CHUNK.min(remaining - i * CHUNK);
    let threads = thread_cap().min(count).max(1);
    if threads == 1 {
        return (0..count).map(|i| restart(s, threshold, seed, i, budget_of(i))).collect();
    }
    let mut slots: Vec<Option<RestartResult>> = (0..count).map(|_| None).collect();
    std::thread::scope(|scope| {
        let chunks: Vec<Vec<usize>> = (0..threads).map(|t| (t..count).step_by(threads).collect()).collect();
        let handles: Vec<_> = chunks
            .into_iter()
            .map(|ids| {
                scope.spawn(move || ids.into_iter().map(|i| (i, restart(s, threshold, seed, i, budget_of(i)))).collect::<Vec<_>>())
            })
            .collect();
        for h in handles {
            for (i, r) in h.join().expect("restart thread panicked") {
                slots[i] = Some(r);
            }
        }
    });
    slots.into_iter().map(|r| r.expect("every restart ran")).collect()
}

/// One random restart: Gaussian sampling, similarity amplification of the
/// best sample, then an entrywise multiplicative hill-climb.
fn restart(s: &ElOp, threshold: f64, seed: u64, index: usize, budget: usize) -> RestartResult {
    let n = s.dim();
    let child = rng::indexed_seed(seed, "restart", index as u64);
    let mut r = rng::rng(child);
    let mut check_rng = rng::labelled(child, "stability");
    let mut used = 0usize;
    let mut track = Track::new();
    let mut best_x = identity(n);
    let mut best = 0.0f64;

    // Returns true once the threshold is crossed by a stable ratio.
    let mut consider = |x: CMat, v: f64, track: &mut Track, best: &mut f64, best_x: &mut CMat, used: &mut usize| -> bool {
        if v <= *best {
            return false;
        }
        *used += 2;
        if !stable(s, &x, v, &mut check_rng) {
            return false;
        }
        *best = v;
        *best_x = x.clone();
        track.push(x, v);
        v >= threshold
    };

    let samples = (budget / 4).clamp(1, 64);
    while used < samples.min(budget) {
        used += 1;
        let x = rng::gauss_mat(&mut r, n, n);
        if used == 1 {
            best_x = x.clone();
        }
        if let Some(v) = floor_ratio(s, &x) {
            if consider(x, v, &mut track, &mut best, &mut best_x, &mut used) {
                return done(track, threshold, child, best, best_x, used);
            }
        }
    }

    let amplify_until = used + (budget.saturating_sub(used)) / 3;
    let mut spread = 1.0f64;
    while used < amplify_until.min(budget) {
        used += 1;
        let u = matcore::random_unitary(&mut r, n);
        let v = matcore::random_unitary(&mut r, n);
        let d: Vec<f64> = (0..n).map(|_| spread * rng::uniform(&mut r, -1.0, 1.0)).collect();
        let h = &u * CMat::from_diagonal(&CVec::from_iterator(n, d.iter().map(|t| real(t.exp())))) * &v;
        let hi = v.adjoint() * CMat::from_diagonal(&CVec::from_iterator(n, d.iter().map(|t| real((-t).exp())))) * u.adjoint();
        let x = &h * &best_x * hi;
        match floor_ratio(s, &x) {
            Some(val) if val > best => {
                if consider(x, val, &mut track, &mut best, &mut best_x, &mut used) {
                    return done(track, threshold, child, best, best_x, used);
                }
                spread = (spread * 1.5).min(8.0);
            }
            _ => spread = (spread * 0.9).max(0.05),
        }
    }

    let mut step = 0.3f64;
    let mut current = best_x.clone();
    let mut current_v = best;
    while used < budget {
        used += 1;
        let i = rng::index(&mut r, n);
        let j = rng::index(&mut r, n);
        let mut x = current.clone();
        let z = rng::gauss(&mut r);
        let bump = fro(&current) / n as f64 * step;
        x[(i, j)] = x[(i, j)] * (C64::new(1.0, 0.0) + z * real(step)) + rng::gauss(&mut r) * real(bump);
        match floor_ratio(s, &x) {
            Some(val) if val > current_v => {
                current = x.clone();
                current_v = val;
                step = (step * 1.3).min(2.0);
                if val > best && consider(x, val, &mut track, &mut best, &mut best_x, &mut used) {
                    return done(track, threshold, child, best, best_x, used);
                }
            }
            _ => step = (step * 0.95).max(1e-3),
        }
    }
    RestartResult { best, best_x, witness: None, used: used.min(budget) }
}

fn done(track: Track, threshold: f64, seed: u64, best: f64, best_x: CMat, used: usize) -> RestartResult {
    RestartResult { best, best_x, witness: Some(track.into_witness(threshold, Construction::Random, seed)), used }
}

/// Sampled check that `Sx` is nilpotent for random `x`, using the power
/// defect rather than the eigenvalues, which are noisy for defective `Sx`.
pub fn infinitesimal_probe(s: &ElOp, samples: usize, seed: u64) -> bool {
    infinitesimal_probe_with(s, samples, seed, &Tolerance::default())
}

pub fn infinitesimal_probe_with(s: &ElOp, samples: usize, seed: u64, tol: &Tolerance) -> bool {
    let n = s.dim();
    let mut r = rng::labelled(seed, "infinitesimal");
    (0..samples).all(|_| {
        let x = rng::gauss_mat(&mut r, n, n);
        apply(s, &x).is_ok_and(|sx| nilpotency_defect(&sx) <= tol.spec_abs)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matcore::unit as e;

    fn cm(re: &[f64]) -> CMat {
        let n = (re.len() as f64).sqrt() as usize;
        CMat::from_row_slice(n, n, &re.iter().map(|&x| real(x)).collect::<Vec<_>>())
    }

    fn e12_op() -> ElOp {
        ElOp::two_sided(e(2, 0, 1), identity(2)).unwrap()
    }

    #[test]
    fn ratio_examples() {
        let mut r = rng::rng(1);
        let x = rng::gauss_mat(&mut r, 3, 3);
        assert!((ratio(&ElOp::identity(3), &x).unwrap().unwrap() - 1.0).abs() < 1e-12);
        let x = cm(&[0.0, 0.01, 100.0, 0.0]);
        assert!((ratio(&e12_op(), &x).unwrap().unwrap() - 100.0).abs() < 1e-9);
        assert_eq!(ratio(&e12_op(), &e(2, 0, 1)).unwrap(), None);
        assert!(ratio(&e12_op(), &identity(3)).is_err());
    }

    #[test]
    fn estimate_examples() {
        let (lb, _) = estimate_spectral_norm(&ElOp::identity(3), 200, 0);
        assert!((lb - 1.0).abs() < 1e-9);
        let mut r = rng::rng(2);
        let u = rng::gauss_mat(&mut r, 3, 3);
        let v = inverse(&u).unwrap() * real(2.0);
        let (lb, _) = estimate_spectral_norm(&ElOp::two_sided(u, v).unwrap(), 500, 0);
        assert!((lb - 2.0).abs() < 1e-3);
        let (lb, _) = estimate_spectral_norm(&e12_op(), 10_000, 0);
        assert!(lb > 1e3);
    }

    #[test]
    fn estimate_is_monotone_in_budget() {
        let mut r = rng::rng(3);
        let s = ElOp::new(3, (0..2).map(|_| (rng::gauss_mat(&mut r, 3, 3), rng::gauss_mat(&mut r, 3, 3))).collect()).unwrap();
        let mut last = 0.0;
        for b in [10, 100, 1000, 2500] {
            let (lb, _) = estimate_spectral_norm(&s, b, 7);
            assert!(lb >= last);
            last = lb;
        }
    }

    #[test]
    fn closed_form_orbit_witness() {
        let w = search_blowup(&e12_op(), 1e3, 10_000, 0).unwrap().unwrap();
        assert_eq!(w.construction.tag(), "orbit");
        w.verify(&e12_op()).unwrap();
        for (x, &ratio) in w.xs.iter().zip(&w.ratios) {
            let k = x[(1, 0)].re;
            assert!((x - cm(&[0.0, 1.0 / k, k, 0.0])).norm() < 1e-12 * k);
            assert!((ratio - k).abs() <= 1e-6 * k);
        }
    }

    #[test]
    fn identity_has_no_witness() {
        assert!(search_blowup(&ElOp::identity(3), 2.0, 2000, 0).unwrap().is_none());
        assert!(search_blowup(&ElOp::identity(3), 0.0, 10, 0).is_err());
    }

    #[test]
    fn family_stage_finds_rank_one_blowup() {
        // x ↦ e12 x e12 + e21 x e21 has K = 0 but sends generic rank-one
        // nilpotents to matrices with eigenvalues ±i·ab.
        let s = ElOp::new(2, vec![(e(2, 0, 1), e(2, 0, 1)), (e(2, 1, 0), e(2, 1, 0))]).unwrap();
        assert!(scalar_of_identity(&trace_vector(&s), &Tolerance::default()).is_some());
        let w = search_blowup(&s, 1e3, 10_000, 0).unwrap().unwrap();
        w.verify(&s).unwrap();
    }

    #[test]
    fn infinitesimal_examples() {
        // Zero product grid on M4: u = e_{1,j+1}, v = e_{i+1,2}.
        let terms = (1..4).map(|j| (e(4, 0, j), e(4, j, 1))).collect();
        let s = ElOp::new(4, terms).unwrap();
        assert!(infinitesimal_probe(&s, 20, 0));
        assert!(fro(&trace_vector(&s)) <= 1e-8);
        assert!(!infinitesimal_probe(&ElOp::identity(3), 5, 0));
    }

    #[test]
    fn threads_do_not_change_results() {
        let mut r = rng::rng(4);
        let s = ElOp::new(3, (0..2).map(|_| (rng::gauss_mat(&mut r, 3, 3), rng::gauss_mat(&mut r, 3, 3))).collect()).unwrap();
        let a = run_restarts(&s, f64::INFINITY, 5, 3, 2500);
        let b: Vec<_> = (0..3).map(|i| restart(&s, f64::INFINITY, 5, i, [1000, 1000, 500][i])).collect();
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.best, y.best);
            assert_eq!(x.best_x, y.best_x);
        }
    }
}
