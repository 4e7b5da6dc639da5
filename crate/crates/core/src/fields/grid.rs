use std::io::{Read, Write};
use std::path::Path;

use super::{FourierModes, VelocityField};
use crate::error::{Error, Result};
use crate::scalar::*;
use crate::spectral::{times_ik, Cplx, Spectral};

const MAGIC: &[u8; 8] = b"DFF1GRID";

/// Velocity samples on a periodic `n³` grid of side `box_len`, stored
/// component-interleaved (`u₁u₂u₃` per point) with x fastest.
#[derive(Clone, Debug, PartialEq)]
pub struct GridField<T> {
    n: usize,
    box_len: T,
    data: Vec<T>,
    pub seed: Option<u64>,
    pub k_max: Option<usize>,
}

pub(crate) type Spectrum3<T> = [Vec<Cplx<T>>; 3];

impl<T: Real> GridField<T> {
    pub fn new(n: usize, box_len: T, data: Vec<T>) -> Result<Self> {
        if n == 0 {
            return Err(Error::MalformedGrid("n must be positive".into()));
        }
        if !(box_len > T::zero()) {
            return Err(Error::MalformedGrid("box length must be positive".into()));
        }
        if data.len() != 3 * n * n * n {
            return Err(Error::MalformedGrid(format!(
                "expected {} values, got {}",
                3 * n * n * n,
                data.len()
            )));
        }
        Ok(Self {
            n,
            box_len,
            data,
            seed: None,
            k_max: None,
        })
    }

    pub fn zeros(n: usize, box_len: T) -> Self {
        Self::new(n, box_len, vec![T::zero(); 3 * n * n * n]).expect("valid zero grid")
    }

    /// Samples `f` at the grid points `(i, j, k)·L/n`.
    pub fn from_fn(n: usize, box_len: T, f: impl Fn(Vec3<T>) -> Vec3<T>) -> Self {
        let sp = Spectral::cubic(n, box_len);
        let mut data = Vec::with_capacity(3 * sp.len());
        for idx in 0..sp.len() {
            data.extend_from_slice(&f(sp.position(idx)));
        }
        Self::new(n, box_len, data).expect("valid sampled grid")
    }

    /// Samples an analytic field. With `centered`, grid coordinates are mapped
    /// to their periodic representative in `[−L/2, L/2)` so fields supported
    /// near the origin embed in the box.
    pub fn sample<F: VelocityField<T> + ?Sized>(field: &F, n: usize, box_len: T, centered: bool) -> Self {
        let half = box_len / T::lit(2.0);
        Self::from_fn(n, box_len, |mut x| {
            if centered {
                for v in x.iter_mut() {
                    if *v >= half {
                        *v = *v - box_len;
                    }
                }
            }
            field.eval(x)
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn box_len(&self) -> T {
        self.box_len
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn points(&self) -> usize {
        self.n * self.n * self.n
    }

    pub fn spacing(&self) -> T {
        self.box_len / T::from_usize_(self.n)
    }

    pub fn spectral(&self) -> Spectral<T> {
        Spectral::cubic(self.n, self.box_len)
    }

    #[inline]
    pub fn velocity(&self, idx: usize) -> Vec3<T> {
        [self.data[3 * idx], self.data[3 * idx + 1], self.data[3 * idx + 2]]
    }

    pub fn component(&self, c: usize) -> Vec<T> {
        self.data.iter().skip(c).step_by(3).copied().collect()
    }

    pub fn from_components(n: usize, box_len: T, comps: [&[T]; 3]) -> Self {
        let mut data = Vec::with_capacity(3 * comps[0].len());
        for i in 0..comps[0].len() {
            data.push(comps[0][i]);
            data.push(comps[1][i]);
            data.push(comps[2][i]);
        }
        Self::new(n, box_len, data).expect("component lengths match the grid")
    }

    pub(crate) fn spectrum(&self, sp: &Spectral<T>) -> Spectrum3<T> {
        [0, 1, 2].map(|c| sp.forward_real(&self.component(c)))
    }

    pub(crate) fn from_spectrum(n: usize, box_len: T, sp: &Spectral<T>, spec: &Spectrum3<T>) -> Self {
        let comps = [0, 1, 2].map(|c| sp.inverse_real(&spec[c]));
        Self::from_components(n, box_len, [&comps[0], &comps[1], &comps[2]])
    }

    /// `|u|_∞` over the grid.
    pub fn sup_norm(&self) -> T {
        self.data.iter().fold(T::zero(), |a, v| a.max(v.abs()))
    }

    /// All nine spectral derivatives, `out[3i + j] = ∂ᵢuⱼ`.
    pub fn gradient(&self) -> Vec<Vec<T>> {
        let sp = self.spectral();
        let spec = self.spectrum(&sp);
        gradient_from_spectrum(&sp, &spec)
    }

    /// `|∇u|_∞` over the grid (spectral derivatives).
    pub fn grad_sup_norm(&self) -> T {
        self.gradient()
            .iter()
            .flat_map(|g| g.iter())
            .fold(T::zero(), |a, v| a.max(v.abs()))
    }

    /// `max_x |∇·u|` computed spectrally.
    pub fn divergence_residual(&self) -> T {
        let sp = self.spectral();
        let spec = self.spectrum(&sp);
        divergence_max(&sp, &spec)
    }

    /// Divergence residual relative to `|u|_∞` (zero for the zero field).
    pub fn relative_divergence(&self) -> T {
        let s = self.sup_norm();
        if s > T::zero() {
            self.divergence_residual() / s
        } else {
            T::zero()
        }
    }

    /// Kinetic energy `½∫|u|²`.
    pub fn energy(&self) -> T {
        let cell = self.spacing().powi(3);
        T::lit(0.5) * cell * self.data.iter().map(|v| *v * *v).sum::<T>()
    }

    /// `|u|₂ = (∫|u|²)^{1/2}`.
    pub fn l2_norm(&self) -> T {
        (T::lit(2.0) * self.energy()).sqrt()
    }

    pub fn max_abs_diff(&self, other: &Self) -> T {
        self.data
            .iter()
            .zip(&other.data)
            .fold(T::zero(), |a, (x, y)| a.max((*x - *y).abs()))
    }

    pub fn scaled(&self, s: T) -> Self {
        let mut g = self.clone();
        for v in g.data.iter_mut() {
            *v = *v * s;
        }
        g
    }

    /// Serialises to the `DFF1` binary layout.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(24 + 8 * self.data.len());
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&(self.n as u64).to_le_bytes());
        out.extend_from_slice(&self.box_len.to_f64_().to_le_bytes());
        for v in &self.data {
            out.extend_from_slice(&v.to_f64_().to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < 24 || &bytes[..8] != MAGIC {
            return Err(Error::Format("missing DFF1GRID magic".into()));
        }
        let n = u64::from_le_bytes(bytes[8..16].try_into().unwrap()) as usize;
        let l = f64::from_le_bytes(bytes[16..24].try_into().unwrap());
        let count = n
            .checked_pow(3)
            .and_then(|v| v.checked_mul(3))
            .ok_or_else(|| Error::Format("grid size overflow".into()))?;
        let payload = &bytes[24..];
        if payload.len() != 8 * count {
            return Err(Error::Format(format!(
                "payload has {} bytes, expected {}",
                payload.len(),
                8 * count
            )));
        }
        let data = payload
            .chunks_exact(8)
            .map(|c| T::lit(f64::from_le_bytes(c.try_into().unwrap())))
            .collect();
        Self::new(n, T::lit(l), data)
    }

    pub fn write_dff1(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut f = std::fs::File::create(path)?;
        f.write_all(&self.to_bytes())?;
        Ok(())
    }

    pub fn read_dff1(path: impl AsRef<Path>) -> Result<Self> {
        let mut bytes = Vec::new();
        std::fs::File::open(path)?.read_to_end(&mut bytes)?;
        Self::from_bytes(&bytes)
    }

    /// Trigonometric interpolation onto an `n_new³` grid (`n_new ≥ n`).
    /// Nyquist modes of the coarse grid are dropped.
    pub fn refined(&self, n_new: usize) -> Result<Self> {
        if n_new < self.n || !n_new.is_power_of_two() {
            return Err(Error::InvalidParameter(format!(
                "cannot refine a {}³ grid to {n_new}³",
                self.n
            )));
        }
        let sp = self.spectral();
        let spec = self.spectrum(&sp);
        let fine = Spectral::cubic(n_new, self.box_len);
        let zero = Cplx::new(T::zero(), T::zero());
        let mut out: Spectrum3<T> = [0, 1, 2].map(|_| vec![zero; fine.len()]);
        let scale = T::from_usize_(fine.len()) / T::from_usize_(sp.len());
        let half = (self.n / 2) as i64;
        let wrap = |m: i64| if m < 0 { (m + n_new as i64) as usize } else { m as usize };
        for idx in 0..sp.len() {
            let m = sp.modes(idx);
            if self.n > 1 && m.iter().any(|&v| v.abs() == half) {
                continue;
            }
            let j = fine.index(wrap(m[0]), wrap(m[1]), wrap(m[2]));
            for c in 0..3 {
                out[c][j] = spec[c][idx] * scale;
            }
        }
        let mut g = Self::from_spectrum(n_new, self.box_len, &fine, &out);
        g.seed = self.seed;
        g.k_max = self.k_max;
        Ok(g)
    }

    /// Trigonometric interpolant at arbitrary points (periodic in each
    /// coordinate). Nyquist modes are dropped.
    pub fn interpolate(&self, points: &[Vec3<T>]) -> Vec<Vec3<T>> {
        let sp = self.spectral();
        let spec = self.spectrum(&sp);
        let half = (self.n / 2) as i64;
        let norm = T::one() / T::from_usize_(sp.len());
        let live: Vec<usize> = (0..sp.len())
            .filter(|&i| self.n == 1 || sp.modes(i).iter().all(|m| m.abs() != half))
            .filter(|&i| spec.iter().any(|c| c[i].norm_sqr() > T::zero()))
            .collect();
        points
            .iter()
            .map(|x| {
                let mut out = zero3();
                for &i in &live {
                    let k = sp.k_deriv(i);
                    let (s, c) = dot3(k, *x).sin_cos();
                    for (o, comp) in out.iter_mut().zip(&spec) {
                        *o = *o + (comp[i].re * c - comp[i].im * s) * norm;
                    }
                }
                out
            })
            .collect()
    }

    /// Spectral Leray projection onto divergence-free fields.
    pub fn leray_project(&self) -> Self {
        let sp = self.spectral();
        let mut spec = self.spectrum(&sp);
        project_spectrum(&sp, &mut spec);
        let mut out = Self::from_spectrum(self.n, self.box_len, &sp, &spec);
        out.seed = self.seed;
        out.k_max = self.k_max;
        out
    }
}

/// Free-function form of [`GridField::leray_project`].
pub fn leray_project<T: Real>(grid: &GridField<T>) -> GridField<T> {
    grid.leray_project()
}

pub(crate) fn project_spectrum<T: Real>(sp: &Spectral<T>, spec: &mut Spectrum3<T>) {
    for idx in 0..sp.len() {
        let k = sp.k_deriv(idx);
        let k2 = dot3(k, k);
        if k2 == T::zero() {
            continue;
        }
        let dot = spec[0][idx] * k[0] + spec[1][idx] * k[1] + spec[2][idx] * k[2];
        for c in 0..3 {
            spec[c][idx] = spec[c][idx] - dot * (k[c] / k2);
        }
    }
}

pub(crate) fn gradient_from_spectrum<T: Real>(sp: &Spectral<T>, spec: &Spectrum3<T>) -> Vec<Vec<T>> {
    let mut out = Vec::with_capacity(9);
    for i in 0..3 {
        for comp in spec.iter() {
            let mut d = comp.clone();
            sp.derivative_in_place(&mut d, i);
            out.push(sp.inverse_real(&d));
        }
    }
    out
}

pub(crate) fn divergence_max<T: Real>(sp: &Spectral<T>, spec: &Spectrum3<T>) -> T {
    let mut div = vec![Cplx::new(T::zero(), T::zero()); sp.len()];
    for (idx, d) in div.iter_mut().enumerate() {
        let k = sp.k_deriv(idx);
        *d = times_ik(spec[0][idx], k[0]) + times_ik(spec[1][idx], k[1]) + times_ik(spec[2][idx], k[2]);
    }
    sp.inverse_real(&div).into_iter().fold(T::zero(), |a, v| a.max(v.abs()))
}

/// Band-limited random solenoidal grid field (see [`FourierModes::random`]).
pub fn random_solenoidal<T: Real>(seed: u64, k_max: usize, amplitude: T, n: usize, box_len: T) -> Result<GridField<T>> {
    if !n.is_power_of_two() {
        return Err(Error::NotPowerOfTwo(n));
    }
    if 3 * k_max >= n {
        return Err(Error::BandTooWide { k_max, n });
    }
    if !(amplitude > T::zero()) {
        return Err(Error::InvalidParameter("amplitude must be positive".into()));
    }
    let modes = FourierModes::random(seed, k_max, amplitude, box_len);
    let mut grid = GridField::sample(&modes, n, box_len, false).leray_project();
    grid.seed = Some(seed);
    grid.k_max = Some(k_max);
    Ok(grid)
}
