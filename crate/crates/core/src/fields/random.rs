use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{Lattice, VelocityField};
use crate::scalar::*;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
struct Mode<T> {
    k: Vec3<T>,
    cos: Vec3<T>,
    sin: Vec3<T>,
}

/// A finite real Fourier series `Σ a_k cos(k·x) + b_k sin(k·x)` on a periodic
/// box with `k·a_k = k·b_k = 0`, hence exactly divergence-free.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FourierModes<T> {
    modes: Vec<Mode<T>>,
    box_len: T,
    seed: u64,
    k_max: usize,
}

/// Integer wavevectors with `0 < |m| ≤ k_max`, one per `±m` pair.
pub(crate) fn half_space_modes(k_max: usize) -> Vec<[i64; 3]> {
    let k = k_max as i64;
    let mut out = Vec::new();
    for m3 in -k..=k {
        for m2 in -k..=k {
            for m1 in -k..=k {
                let m = [m1, m2, m3];
                let r2 = m1 * m1 + m2 * m2 + m3 * m3;
                if r2 == 0 || r2 > k * k {
                    continue;
                }
                let first = m.iter().copied().find(|&v| v != 0).unwrap();
                if first > 0 {
                    out.push(m);
                }
            }
        }
    }
    out
}

impl<T: Real> FourierModes<T> {
    /// Random solenoidal series with modes `|m| ≤ k_max`, spectral weight
    /// `1/(1+|m|²)`, normalised so the sup over a sampling lattice equals
    /// `amplitude`. Deterministic in `seed`.
    pub fn random(seed: u64, k_max: usize, amplitude: T, box_len: T) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let kscale = T::TAU() / box_len;
        let mut modes = Vec::new();
        for m in half_space_modes(k_max) {
            let mut re = [0.0f64; 3];
            let mut im = [0.0f64; 3];
            for c in 0..3 {
                re[c] = StandardNormal.sample(&mut rng);
                im[c] = StandardNormal.sample(&mut rng);
            }
            let mf = m.map(|v| v as f64);
            let m2 = mf.iter().map(|v| v * v).sum::<f64>();
            let weight = 1.0 / (1.0 + m2);
            let pr = re.iter().zip(&mf).map(|(a, b)| a * b).sum::<f64>() / m2;
            let pi = im.iter().zip(&mf).map(|(a, b)| a * b).sum::<f64>() / m2;
            let mut cos = zero3();
            let mut sin = zero3();
            for c in 0..3 {
                cos[c] = T::lit(2.0 * weight * (re[c] - pr * mf[c]));
                sin[c] = T::lit(-2.0 * weight * (im[c] - pi * mf[c]));
            }
            let k = m.map(|v| T::from_i64_(v) * kscale);
            modes.push(Mode { k, cos, sin });
        }
        let mut field = Self {
            modes,
            box_len,
            seed,
            k_max,
        };
        if !field.modes.is_empty() {
            let cells = (4 * k_max).max(8);
            let lat = Lattice::new(zero3(), [box_len; 3], cells);
            let sup = super::sup_norm(&field, &lat).unwrap_or(T::zero());
            if sup > T::zero() {
                let s = amplitude / sup;
                for m in field.modes.iter_mut() {
                    m.cos = scale3(m.cos, s);
                    m.sin = scale3(m.sin, s);
                }
            }
        }
        field
    }

    pub fn box_len(&self) -> T {
        self.box_len
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn k_max(&self) -> usize {
        self.k_max
    }

    pub fn mode_count(&self) -> usize {
        self.modes.len()
    }
}

impl<T: Real> VelocityField<T> for FourierModes<T> {
    fn eval(&self, x: Vec3<T>) -> Vec3<T> {
        let mut u = zero3();
        for m in &self.modes {
            let (s, c) = dot3(m.k, x).sin_cos();
            for j in 0..3 {
                u[j] = u[j] + m.cos[j] * c + m.sin[j] * s;
            }
        }
        u
    }

    fn grad(&self, x: Vec3<T>) -> Mat3<T> {
        self.eval_with_grad(x).1
    }

    fn eval_with_grad(&self, x: Vec3<T>) -> (Vec3<T>, Mat3<T>) {
        let mut u = zero3();
        let mut g = zero33();
        for m in &self.modes {
            let (s, c) = dot3(m.k, x).sin_cos();
            let mut d = zero3();
            for j in 0..3 {
                u[j] = u[j] + m.cos[j] * c + m.sin[j] * s;
                d[j] = m.sin[j] * c - m.cos[j] * s;
            }
            for i in 0..3 {
                for j in 0..3 {
                    g[i][j] = g[i][j] + m.k[i] * d[j];
                }
            }
        }
        (u, g)
    }

    fn descriptor(&self) -> String {
        format!("fourier(seed={},k_max={})", self.seed, self.k_max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn modes_are_solenoidal_and_deterministic() {
        let a = FourierModes::<f64>::random(7, 3, 1.0, 6.0);
        let b = FourierModes::<f64>::random(7, 3, 1.0, 6.0);
        assert_eq!(a, b);
        for x in [[0.1, 0.2, 0.3], [2.0, -1.0, 4.5]] {
            assert!(trace33(&a.grad(x)).abs() < 1e-12);
        }
        let c = FourierModes::<f64>::random(8, 3, 1.0, 6.0);
        assert_ne!(a, c);
    }

    #[test]
    fn zero_band_is_zero_field() {
        let f = FourierModes::<f64>::random(1, 0, 1.0, 6.0);
        assert_eq!(f.mode_count(), 0);
        assert_eq!(f.eval([1.0, 2.0, 3.0]), [0.0; 3]);
    }

    #[test]
    fn half_space_has_no_antipodes() {
        let ms = half_space_modes(2);
        for m in &ms {
            assert!(!ms.contains(&[-m[0], -m[1], -m[2]]));
        }
        // 32 nonzero points with |m| ≤ 2, split in antipodal pairs
        assert_eq!(ms.len(), 16);
    }
}
