//! Periodic-box Fourier transforms and wavenumber bookkeeping.
//!
//! Arrays are stored x-fastest: point `(i, j, k)` lives at `i + n₁(j + n₂k)`.
//! Derivative wavenumbers vanish on the Nyquist plane of even-sized axes, so
//! spectral derivatives of real data stay real.

use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::scalar::Real;

pub type Cplx<T> = Complex<T>;

pub struct Spectral<T: Real> {
    shape: [usize; 3],
    lengths: [T; 3],
    forward: [Arc<dyn Fft<T>>; 3],
    inverse: [Arc<dyn Fft<T>>; 3],
    /// Physical wavenumber per axis index, full (Nyquist kept as -n/2).
    k_full: [Vec<T>; 3],
    /// Derivative wavenumber per axis index (Nyquist zeroed).
    k_deriv: [Vec<T>; 3],
    modes: [Vec<i64>; 3],
}

impl<T: Real> std::fmt::Debug for Spectral<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Spectral")
            .field("shape", &self.shape)
            .field("lengths", &self.lengths)
            .finish()
    }
}

/// Signed Fourier mode for storage index `idx` on an axis of `n` points.
pub fn signed_mode(idx: usize, n: usize) -> i64 {
    if idx <= n / 2 {
        idx as i64
    } else {
        idx as i64 - n as i64
    }
}

impl<T: Real> Spectral<T> {
    pub fn new(shape: [usize; 3], lengths: [T; 3]) -> Self {
        let mut planner = FftPlanner::<T>::new();
        let forward = shape.map(|n| planner.plan_fft_forward(n));
        let inverse = shape.map(|n| planner.plan_fft_inverse(n));
        let two_pi = T::TAU();
        let mut k_full: [Vec<T>; 3] = Default::default();
        let mut k_deriv: [Vec<T>; 3] = Default::default();
        let mut modes: [Vec<i64>; 3] = Default::default();
        for a in 0..3 {
            let n = shape[a];
            for idx in 0..n {
                let m = signed_mode(idx, n);
                let k = two_pi * T::from_i64_(m) / lengths[a];
                modes[a].push(m);
                k_full[a].push(k);
                let nyquist = n.is_multiple_of(2) && idx == n / 2;
                k_deriv[a].push(if nyquist { T::zero() } else { k });
            }
        }
        Self {
            shape,
            lengths,
            forward,
            inverse,
            k_full,
            k_deriv,
            modes,
        }
    }

    pub fn cubic(n: usize, length: T) -> Self {
        Self::new([n; 3], [length; 3])
    }

    pub fn shape(&self) -> [usize; 3] {
        self.shape
    }

    pub fn lengths(&self) -> [T; 3] {
        self.lengths
    }

    pub fn len(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        i + self.shape[0] * (j + self.shape[1] * k)
    }

    #[inline]
    pub fn unindex(&self, idx: usize) -> [usize; 3] {
        let i = idx % self.shape[0];
        let r = idx / self.shape[0];
        [i, r % self.shape[1], r / self.shape[1]]
    }

    /// Physical coordinates of grid point `idx`, in `[0, L)`.
    pub fn position(&self, idx: usize) -> [T; 3] {
        let ijk = self.unindex(idx);
        let mut x = [T::zero(); 3];
        for a in 0..3 {
            x[a] = self.lengths[a] * T::from_usize_(ijk[a]) / T::from_usize_(self.shape[a]);
        }
        x
    }

    /// Derivative wavevector of spectral index `idx`.
    #[inline]
    pub fn k_deriv(&self, idx: usize) -> [T; 3] {
        let [i, j, k] = self.unindex(idx);
        [self.k_deriv[0][i], self.k_deriv[1][j], self.k_deriv[2][k]]
    }

    /// `|k|²` with the Nyquist wavenumber kept, as used by the Laplacian.
    #[inline]
    pub fn k2(&self, idx: usize) -> T {
        let [i, j, k] = self.unindex(idx);
        let (a, b, c) = (self.k_full[0][i], self.k_full[1][j], self.k_full[2][k]);
        a * a + b * b + c * c
    }

    /// Signed integer modes of spectral index `idx`.
    #[inline]
    pub fn modes(&self, idx: usize) -> [i64; 3] {
        let [i, j, k] = self.unindex(idx);
        [self.modes[0][i], self.modes[1][j], self.modes[2][k]]
    }

    pub fn forward(&self, data: &mut [Cplx<T>]) {
        self.transform(data, &self.forward);
    }

    /// Inverse transform including the `1/N` normalisation.
    pub fn inverse(&self, data: &mut [Cplx<T>]) {
        self.transform(data, &self.inverse);
        let s = T::one() / T::from_usize_(self.len());
        for v in data.iter_mut() {
            *v = *v * s;
        }
    }

    pub fn forward_real(&self, data: &[T]) -> Vec<Cplx<T>> {
        let mut c: Vec<Cplx<T>> = data.iter().map(|&v| Cplx::new(v, T::zero())).collect();
        self.forward(&mut c);
        c
    }

    pub fn inverse_real(&self, spec: &[Cplx<T>]) -> Vec<T> {
        let mut c = spec.to_vec();
        self.inverse(&mut c);
        c.into_iter().map(|v| v.re).collect()
    }

    fn transform(&self, data: &mut [Cplx<T>], plans: &[Arc<dyn Fft<T>>; 3]) {
        assert_eq!(data.len(), self.len(), "spectral buffer length mismatch");
        let [n1, n2, n3] = self.shape;
        if n1 > 1 {
            plans[0].process(data);
        }
        let mut buf = vec![Cplx::new(T::zero(), T::zero()); data.len()];
        if n2 > 1 {
            for k in 0..n3 {
                for i in 0..n1 {
                    let base = (k * n1 + i) * n2;
                    for j in 0..n2 {
                        buf[base + j] = data[i + n1 * (j + n2 * k)];
                    }
                }
            }
            plans[1].process(&mut buf);
            for k in 0..n3 {
                for i in 0..n1 {
                    let base = (k * n1 + i) * n2;
                    for j in 0..n2 {
                        data[i + n1 * (j + n2 * k)] = buf[base + j];
                    }
                }
            }
        }
        if n3 > 1 {
            for j in 0..n2 {
                for i in 0..n1 {
                    let base = (j * n1 + i) * n3;
                    for k in 0..n3 {
                        buf[base + k] = data[i + n1 * (j + n2 * k)];
                    }
                }
            }
            plans[2].process(&mut buf);
            for j in 0..n2 {
                for i in 0..n1 {
                    let base = (j * n1 + i) * n3;
                    for k in 0..n3 {
                        data[i + n1 * (j + n2 * k)] = buf[base + k];
                    }
                }
            }
        }
    }

    /// Spectral partial derivative along `axis` of a real field.
    pub fn derivative(&self, data: &[T], axis: usize) -> Vec<T> {
        let mut spec = self.forward_real(data);
        self.derivative_in_place(&mut spec, axis);
        self.inverse_real(&spec)
    }

    /// Multiplies spectral coefficients by `i k_axis`.
    pub fn derivative_in_place(&self, spec: &mut [Cplx<T>], axis: usize) {
        for (idx, v) in spec.iter_mut().enumerate() {
            let k = self.k_deriv(idx)[axis];
            *v = Cplx::new(-v.im * k, v.re * k);
        }
    }
}

/// Multiplies `v` by `i·k`.
#[inline]
pub fn times_ik<T: Real>(v: Cplx<T>, k: T) -> Cplx<T> {
    Cplx::new(-v.im * k, v.re * k)
}
