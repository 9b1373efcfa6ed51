//! Seeded randomness. Every sampling routine takes an explicit `u64` seed and
//! derives sub-streams by hashing a fixed label, so results never depend on
//! call order elsewhere in the program.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::matcore::{CMat, CVec, C64};

pub type Rng = ChaCha8Rng;

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Child seed for `label` under `seed` (FNV-1a over the label, then splitmix).
pub fn child_seed(seed: u64, label: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in label.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    splitmix(seed ^ splitmix(h))
}

/// Child seed for the `index`-th item of a labelled stream.
pub fn indexed_seed(seed: u64, label: &str, index: u64) -> u64 {
    splitmix(child_seed(seed, label) ^ splitmix(index.wrapping_add(1)))
}

pub fn rng(seed: u64) -> Rng {
    Rng::seed_from_u64(seed)
}

pub fn labelled(seed: u64, label: &str) -> Rng {
    rng(child_seed(seed, label))
}

/// Standard complex Gaussian scalar (real and imaginary parts N(0, 1/2)).
pub fn gauss(r: &mut Rng) -> C64 {
    let re: f64 = StandardNormal.sample(r);
    let im: f64 = StandardNormal.sample(r);
    C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

pub fn gauss_vec(r: &mut Rng, n: usize) -> CVec {
    CVec::from_fn(n, |_, _| gauss(r))
}

pub fn gauss_mat(r: &mut Rng, rows: usize, cols: usize) -> CMat {
    CMat::from_fn(rows, cols, |_, _| gauss(r))
}

pub fn uniform(r: &mut Rng, lo: f64, hi: f64) -> f64 {
    use rand::Rng as _;
    r.random_range(lo..hi)
}

pub fn index(r: &mut Rng, n: usize) -> usize {
    use rand::Rng as _;
    r.random_range(0..n)
}
