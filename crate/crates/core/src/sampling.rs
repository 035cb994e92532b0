//! Low-discrepancy sampling of jet boxes.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::scalar::Scalar;

/// Axis-aligned box for (z0, z1, z2, z3).
#[derive(Clone, Debug, PartialEq)]
pub struct JetBox<T> {
    pub lo: [T; 4],
    pub hi: [T; 4],
}

impl<T: Scalar> JetBox<T> {
    pub fn cube(half: T) -> Self {
        Self { lo: [-half; 4], hi: [half; 4] }
    }
}

impl<T: Scalar> Default for JetBox<T> {
    fn default() -> Self {
        Self::cube(T::of(2.0))
    }
}

/// Radical inverse of `index` in `base`.
pub fn halton(mut index: u64, base: u64) -> f64 {
    let mut f = 1.0;
    let mut r = 0.0;
    while index > 0 {
        f /= base as f64;
        r += f * (index % base) as f64;
        index /= base;
    }
    r
}

/// Halton points in a [`JetBox`] with a seeded random rotation.
///
/// The rotation keeps points off the dyadic grid, where polynomial plugin
/// functions such as `psi = z0` vanish exactly.
#[derive(Clone, Debug)]
pub struct QuasiRandom<T> {
    domain: JetBox<T>,
    shift: [f64; 4],
    index: u64,
}

const BASES: [u64; 4] = [2, 3, 5, 7];

impl<T: Scalar> QuasiRandom<T> {
    pub fn new(domain: JetBox<T>, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let shift = [rng.gen(), rng.gen(), rng.gen(), rng.gen()];
        Self { domain, shift, index: 1 }
    }

    pub fn next_point(&mut self) -> [T; 4] {
        let mut out = [T::zero(); 4];
        for k in 0..4 {
            let u = (halton(self.index, BASES[k]) + self.shift[k]).fract();
            out[k] = self.domain.lo[k] + (self.domain.hi[k] - self.domain.lo[k]) * T::of(u);
        }
        self.index += 1;
        out
    }

    pub fn points(&mut self, n: usize) -> Vec<[T; 4]> {
        (0..n).map(|_| self.next_point()).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn radical_inverse() {
        assert_eq!(halton(1, 2), 0.5);
        assert_eq!(halton(3, 2), 0.75);
        assert!((halton(5, 3) - (2.0 / 3.0 + 1.0 / 9.0)).abs() < 1e-15);
    }

    #[test]
    fn points_stay_in_box_and_repeat_per_seed() {
        let dom = JetBox::<f64>::default();
        let a = QuasiRandom::new(dom.clone(), 7).points(500);
        let b = QuasiRandom::new(dom, 7).points(500);
        assert_eq!(a, b);
        assert!(a.iter().flatten().all(|v| (-2.0..2.0).contains(v)));
    }
}
