//! Divergence-free velocity fields: closed forms, random Fourier families and
//! periodic grid samples.
//!
//! Norms follow the componentwise convention: `|u|_∞ = maxᵢ sup |uᵢ|` and
//! `|∇u|_∞ = maxᵢⱼ sup |∂ⱼuᵢ|`.

pub(crate) mod grid;
mod random;

pub use grid::{leray_project, random_solenoidal, GridField};
pub use random::FourierModes;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::*;

/// A velocity field with an exact gradient, evaluable anywhere in ℝ³.
pub trait VelocityField<T: Real>: Send + Sync {
    fn eval(&self, x: Vec3<T>) -> Vec3<T>;

    /// `m[i][j] = ∂ᵢuⱼ(x)`.
    fn grad(&self, x: Vec3<T>) -> Mat3<T>;

    fn eval_with_grad(&self, x: Vec3<T>) -> (Vec3<T>, Mat3<T>) {
        (self.eval(x), self.grad(x))
    }

    fn descriptor(&self) -> String;

    /// A ball `(center, radius)` outside of which the field vanishes.
    fn support(&self) -> Option<(Vec3<T>, T)> {
        None
    }
}

impl<T: Real, F: VelocityField<T> + ?Sized> VelocityField<T> for &F {
    fn eval(&self, x: Vec3<T>) -> Vec3<T> {
        (**self).eval(x)
    }
    fn grad(&self, x: Vec3<T>) -> Mat3<T> {
        (**self).grad(x)
    }
    fn eval_with_grad(&self, x: Vec3<T>) -> (Vec3<T>, Mat3<T>) {
        (**self).eval_with_grad(x)
    }
    fn descriptor(&self) -> String {
        (**self).descriptor()
    }
    fn support(&self) -> Option<(Vec3<T>, T)> {
        (**self).support()
    }
}

impl<T: Real, F: VelocityField<T> + ?Sized> VelocityField<T> for Box<F> {
    fn eval(&self, x: Vec3<T>) -> Vec3<T> {
        (**self).eval(x)
    }
    fn grad(&self, x: Vec3<T>) -> Mat3<T> {
        (**self).grad(x)
    }
    fn eval_with_grad(&self, x: Vec3<T>) -> (Vec3<T>, Mat3<T>) {
        (**self).eval_with_grad(x)
    }
    fn descriptor(&self) -> String {
        (**self).descriptor()
    }
    fn support(&self) -> Option<(Vec3<T>, T)> {
        (**self).support()
    }
}

/// One compactly supported stream-function bump: `ψ = a·(1 − |x−c|²/R²)^p`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Bump<T> {
    pub center: Vec3<T>,
    pub axis: Vec3<T>,
    pub radius: T,
}

/// Closed-form test fields.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum StandardField<T> {
    Constant {
        value: Vec3<T>,
    },
    /// `u = (rate·x₂, 0, 0)`.
    Shear {
        rate: T,
    },
    /// `u = A(cos x₁ sin x₂, −sin x₁ cos x₂, 0)`.
    TaylorGreen {
        amplitude: T,
    },
    /// `u = (A sin x₃ + C cos x₂, B sin x₁ + A cos x₃, C sin x₂ + B cos x₁)`.
    Abc {
        a: T,
        b: T,
        c: T,
    },
    /// `u = Σ ∇×ψ_b` over compactly supported bumps with exponent `power`.
    CurlPotential {
        bumps: Vec<Bump<T>>,
        power: u32,
    },
}

/// Builds a named closed-form field from a flat parameter list.
///
/// | name | params |
/// |------|--------|
/// | `constant` | `c₁ c₂ c₃` |
/// | `shear` | `[rate]` (default 1) |
/// | `taylor_green` | `[amplitude]` |
/// | `abc` | `[A B C]` (default 1 1 1) |
/// | `curl_potential` | `[support_radius [amplitude [power]]]` |
pub fn make_standard_field<T: Real>(name: &str, params: &[T]) -> Result<StandardField<T>> {
    let get = |i: usize, default: f64| params.get(i).copied().unwrap_or(T::lit(default));
    let field = match name {
        "constant" => {
            if params.len() != 3 {
                return Err(Error::InvalidParameter("constant field needs three components".into()));
            }
            StandardField::Constant {
                value: [params[0], params[1], params[2]],
            }
        }
        "shear" => StandardField::Shear { rate: get(0, 1.0) },
        "taylor_green" => StandardField::TaylorGreen { amplitude: get(0, 1.0) },
        "abc" => StandardField::Abc {
            a: get(0, 1.0),
            b: get(1, 1.0),
            c: get(2, 1.0),
        },
        "curl_potential" => {
            let r = get(0, 1.0);
            let amp = get(1, 1.0);
            let power = get(2, 6.0);
            if r <= T::zero() {
                return Err(Error::InvalidParameter("support radius must be positive".into()));
            }
            let p = power.to_f64_();
            if p < 3.0 || p.fract() != 0.0 {
                return Err(Error::InvalidParameter("bump power must be an integer ≥ 3".into()));
            }
            StandardField::curl_potential(r, amp, p as u32)
        }
        other => return Err(Error::UnknownField(other.to_string())),
    };
    Ok(field)
}

impl<T: Real> StandardField<T> {
    /// The default two-bump configuration inside the ball of radius `r`.
    pub fn curl_potential(r: T, amplitude: T, power: u32) -> Self {
        let l = T::lit;
        let bumps = vec![
            Bump {
                center: [l(0.25) * r, l(0.1) * r, T::zero()],
                axis: [T::zero(), l(0.3) * amplitude * r, amplitude * r],
                radius: l(0.6) * r,
            },
            Bump {
                center: [l(-0.2) * r, l(-0.15) * r, l(0.1) * r],
                axis: [amplitude * r, l(0.5) * amplitude * r, T::zero()],
                radius: l(0.55) * r,
            },
        ];
        StandardField::CurlPotential { bumps, power }
    }
}

fn bump_terms<T: Real>(b: &Bump<T>, power: u32, x: Vec3<T>) -> Option<(Vec3<T>, Mat3<T>)> {
    let d = sub3(x, b.center);
    let r2 = b.radius * b.radius;
    let s = dot3(d, d) / r2;
    if s >= T::one() {
        return None;
    }
    let p = T::from_usize_(power as usize);
    let one_minus = T::one() - s;
    let two = T::lit(2.0);
    // g = ∇φ, h = ∇∇φ for φ = (1 − s)^p
    let gp = -p * one_minus.powi(power as i32 - 1) * two / r2;
    let g = scale3(d, gp);
    let c_outer = T::lit(4.0) * p * (p - T::one()) * one_minus.powi(power as i32 - 2) / (r2 * r2);
    let mut h = zero33();
    for i in 0..3 {
        for j in 0..3 {
            h[i][j] = c_outer * d[i] * d[j];
        }
        h[i][i] = h[i][i] + gp;
    }
    let u = cross3(g, b.axis);
    let mut m = zero33();
    for i in 0..3 {
        m[i] = cross3(h[i], b.axis);
    }
    Some((u, m))
}

impl<T: Real> VelocityField<T> for StandardField<T> {
    fn eval(&self, x: Vec3<T>) -> Vec3<T> {
        self.eval_with_grad(x).0
    }

    fn grad(&self, x: Vec3<T>) -> Mat3<T> {
        self.eval_with_grad(x).1
    }

    fn eval_with_grad(&self, x: Vec3<T>) -> (Vec3<T>, Mat3<T>) {
        let z = T::zero();
        match self {
            StandardField::Constant { value } => (*value, zero33()),
            StandardField::Shear { rate } => {
                let mut m = zero33();
                m[1][0] = *rate;
                ([*rate * x[1], z, z], m)
            }
            StandardField::TaylorGreen { amplitude: a } => {
                let (sx, cx) = x[0].sin_cos();
                let (sy, cy) = x[1].sin_cos();
                let a = *a;
                let u = [a * cx * sy, -a * sx * cy, z];
                let m = [
                    [-a * sx * sy, -a * cx * cy, z],
                    [a * cx * cy, a * sx * sy, z],
                    [z, z, z],
                ];
                (u, m)
            }
            StandardField::Abc { a, b, c } => {
                let (a, b, c) = (*a, *b, *c);
                let (s1, c1) = x[0].sin_cos();
                let (s2, c2) = x[1].sin_cos();
                let (s3, c3) = x[2].sin_cos();
                let u = [a * s3 + c * c2, b * s1 + a * c3, c * s2 + b * c1];
                let m = [[z, b * c1, -b * s1], [-c * s2, z, c * c2], [a * c3, -a * s3, z]];
                (u, m)
            }
            StandardField::CurlPotential { bumps, power } => {
                let mut u = zero3();
                let mut m = zero33();
                for b in bumps {
                    if let Some((bu, bm)) = bump_terms(b, *power, x) {
                        u = add3(u, bu);
                        for i in 0..3 {
                            m[i] = add3(m[i], bm[i]);
                        }
                    }
                }
                (u, m)
            }
        }
    }

    fn descriptor(&self) -> String {
        match self {
            StandardField::Constant { value } => {
                format!("constant({},{},{})", value[0], value[1], value[2])
            }
            StandardField::Shear { rate } => format!("shear({rate})"),
            StandardField::TaylorGreen { amplitude } => format!("taylor_green({amplitude})"),
            StandardField::Abc { a, b, c } => format!("abc({a},{b},{c})"),
            StandardField::CurlPotential { bumps, power } => {
                format!("curl_potential({} bumps, p={power})", bumps.len())
            }
        }
    }

    fn support(&self) -> Option<(Vec3<T>, T)> {
        match self {
            StandardField::CurlPotential { bumps, .. } => {
                let r = bumps.iter().map(|b| norm3(b.center) + b.radius).fold(T::zero(), T::max);
                Some((zero3(), r))
            }
            _ => None,
        }
    }
}

/// `x ↦ u(x/s)`, the spatially dilated field.
#[derive(Clone, Debug)]
pub struct Dilated<F> {
    pub inner: F,
    pub factor: f64,
}

impl<T: Real, F: VelocityField<T>> VelocityField<T> for Dilated<F> {
    fn eval(&self, x: Vec3<T>) -> Vec3<T> {
        let s = T::lit(self.factor);
        self.inner.eval(scale3(x, T::one() / s))
    }
    fn grad(&self, x: Vec3<T>) -> Mat3<T> {
        self.eval_with_grad(x).1
    }
    fn eval_with_grad(&self, x: Vec3<T>) -> (Vec3<T>, Mat3<T>) {
        let s = T::lit(self.factor);
        let (u, mut m) = self.inner.eval_with_grad(scale3(x, T::one() / s));
        for row in m.iter_mut() {
            *row = scale3(*row, T::one() / s);
        }
        (u, m)
    }
    fn descriptor(&self) -> String {
        format!("{}∘(x/{})", self.inner.descriptor(), self.factor)
    }
    fn support(&self) -> Option<(Vec3<T>, T)> {
        let s = T::lit(self.factor);
        self.inner.support().map(|(c, r)| (scale3(c, s), r * s))
    }
}

/// `x ↦ u(x + offset)`: moves the point `offset` to the origin.
#[derive(Clone, Debug)]
pub struct Translated<F, T> {
    pub inner: F,
    pub offset: Vec3<T>,
}

impl<T: Real, F: VelocityField<T>> VelocityField<T> for Translated<F, T> {
    fn eval(&self, x: Vec3<T>) -> Vec3<T> {
        self.inner.eval(add3(x, self.offset))
    }
    fn grad(&self, x: Vec3<T>) -> Mat3<T> {
        self.inner.grad(add3(x, self.offset))
    }
    fn eval_with_grad(&self, x: Vec3<T>) -> (Vec3<T>, Mat3<T>) {
        self.inner.eval_with_grad(add3(x, self.offset))
    }
    fn descriptor(&self) -> String {
        self.inner.descriptor()
    }
    fn support(&self) -> Option<(Vec3<T>, T)> {
        self.inner.support().map(|(c, r)| (sub3(c, self.offset), r))
    }
}

/// `u − c` for a constant velocity `c` (Galilean frame change).
#[derive(Clone, Debug)]
pub struct Boosted<F, T> {
    pub inner: F,
    pub velocity: Vec3<T>,
}

impl<T: Real, F: VelocityField<T>> VelocityField<T> for Boosted<F, T> {
    fn eval(&self, x: Vec3<T>) -> Vec3<T> {
        sub3(self.inner.eval(x), self.velocity)
    }
    fn grad(&self, x: Vec3<T>) -> Mat3<T> {
        self.inner.grad(x)
    }
    fn eval_with_grad(&self, x: Vec3<T>) -> (Vec3<T>, Mat3<T>) {
        let (u, m) = self.inner.eval_with_grad(x);
        (sub3(u, self.velocity), m)
    }
    fn descriptor(&self) -> String {
        self.inner.descriptor()
    }
}

/// Finite point set covering a region, used to estimate oscillations.
#[derive(Clone, Debug, PartialEq)]
pub struct RegionSampler<T> {
    points: Vec<Vec3<T>>,
}

impl<T: Real> RegionSampler<T> {
    pub fn new(points: Vec<Vec3<T>>) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::EmptySampler(points.len()));
        }
        Ok(Self { points })
    }

    pub fn points(&self) -> &[Vec3<T>] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn merged(mut self, other: &RegionSampler<T>) -> Self {
        self.points.extend_from_slice(&other.points);
        self
    }
}

/// Sampled lower bound of `w(A) = sup |u(x) − u(x′)|` over `x, x′ ∈ A`.
pub fn oscillation<T: Real, F: VelocityField<T> + ?Sized>(field: &F, sampler: &RegionSampler<T>) -> T {
    let vel: Vec<Vec3<T>> = sampler.points().iter().map(|&p| field.eval(p)).collect();
    velocity_diameter(&vel)
}

/// Largest Euclidean distance within a set of velocity vectors.
pub fn velocity_diameter<T: Real>(vel: &[Vec3<T>]) -> T {
    let mut best = T::zero();
    for (i, a) in vel.iter().enumerate() {
        for b in &vel[i + 1..] {
            let d0 = a[0] - b[0];
            let d1 = a[1] - b[1];
            let d2 = a[2] - b[2];
            let d = d0 * d0 + d1 * d1 + d2 * d2;
            if d > best {
                best = d;
            }
        }
    }
    best.sqrt()
}

/// Inclusive tensor lattice on a box: `cells + 1` points per axis.
#[derive(Clone, Debug, PartialEq)]
pub struct Lattice<T> {
    pub lo: Vec3<T>,
    pub hi: Vec3<T>,
    pub cells: usize,
}

impl<T: Real> Lattice<T> {
    pub fn new(lo: Vec3<T>, hi: Vec3<T>, cells: usize) -> Self {
        Self { lo, hi, cells }
    }

    /// The nested lattice with twice the cells per axis.
    pub fn refined(&self) -> Self {
        Self {
            cells: self.cells * 2,
            ..self.clone()
        }
    }

    pub fn points(&self) -> Result<Vec<Vec3<T>>> {
        if self.cells == 0 {
            return Err(Error::EmptyLattice);
        }
        let m = self.cells + 1;
        let c = T::from_usize_(self.cells);
        let mut pts = Vec::with_capacity(m * m * m);
        for k in 0..m {
            for j in 0..m {
                for i in 0..m {
                    let f = [i, j, k].map(T::from_usize_);
                    let mut p = zero3();
                    for a in 0..3 {
                        p[a] = self.lo[a] + (self.hi[a] - self.lo[a]) * f[a] / c;
                    }
                    pts.push(p);
                }
            }
        }
        Ok(pts)
    }
}

/// `|u|_∞` over the lattice nodes.
pub fn sup_norm<T: Real, F: VelocityField<T> + ?Sized>(field: &F, lattice: &Lattice<T>) -> Result<T> {
    Ok(lattice
        .points()?
        .into_iter()
        .map(|p| max_abs3(field.eval(p)))
        .fold(T::zero(), T::max))
}

/// `|∇u|_∞` over the lattice nodes.
pub fn grad_sup_norm<T: Real, F: VelocityField<T> + ?Sized>(field: &F, lattice: &Lattice<T>) -> Result<T> {
    Ok(lattice
        .points()?
        .into_iter()
        .map(|p| {
            field
                .grad(p)
                .iter()
                .flat_map(|row| row.iter())
                .fold(T::zero(), |acc, v| acc.max(v.abs()))
        })
        .fold(T::zero(), T::max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn fd_grad<F: VelocityField<f64>>(f: &F, x: Vec3<f64>, h: f64) -> Mat3<f64> {
        let mut m = zero33();
        for i in 0..3 {
            let mut xp = x;
            let mut xm = x;
            xp[i] += h;
            xm[i] -= h;
            let (up, um) = (f.eval(xp), f.eval(xm));
            for j in 0..3 {
                m[i][j] = (up[j] - um[j]) / (2.0 * h);
            }
        }
        m
    }

    fn sample_points() -> Vec<Vec3<f64>> {
        crate::quadrature::halton::<f64>(40, 3)
            .into_iter()
            .map(|p| [2.0 * p[0] - 1.0, 2.0 * p[1] - 1.0, 2.0 * p[2] - 1.0])
            .collect()
    }

    fn all_standard() -> Vec<StandardField<f64>> {
        vec![
            make_standard_field("constant", &[1.0, 2.0, 3.0]).unwrap(),
            make_standard_field("shear", &[]).unwrap(),
            make_standard_field("taylor_green", &[1.3]).unwrap(),
            make_standard_field("abc", &[1.0, 0.7, 0.4]).unwrap(),
            make_standard_field("curl_potential", &[3.0]).unwrap(),
        ]
    }

    #[test]
    fn standard_fields_are_solenoidal_with_exact_gradients() {
        for f in all_standard() {
            for x in sample_points() {
                let m = f.grad(x);
                assert!(trace33(&m).abs() < 1e-12, "{}", f.descriptor());
                let fd = fd_grad(&f, x, 1e-4);
                let scale = m.iter().flatten().fold(1e-3f64, |a, v| a.max(v.abs()));
                for i in 0..3 {
                    for j in 0..3 {
                        let err = (fd[i][j] - m[i][j]).abs() / scale;
                        assert!(err < 1e-6, "{} ∂{i}u{j}: {err}", f.descriptor());
                    }
                }
            }
        }
    }

    #[test]
    fn constant_and_shear_examples() {
        let c = make_standard_field("constant", &[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(c.eval([5.0, -1.0, 2.0]), [1.0, 2.0, 3.0]);
        assert_eq!(c.grad([0.3, 0.0, 0.0]), zero33());
        let s = make_standard_field::<f64>("shear", &[]).unwrap();
        let m = s.grad([0.1, 0.2, 0.3]);
        let nonzero: Vec<_> = m.iter().flatten().filter(|v| **v != 0.0).collect();
        assert_eq!(nonzero, vec![&1.0]);
        assert_eq!(m[1][0], 1.0);
    }

    #[test]
    fn abc_at_origin() {
        let f = make_standard_field("abc", &[1.0, 1.0, 1.0]).unwrap();
        assert_eq!(f.eval([0.0; 3]), [1.0, 1.0, 1.0]);
    }

    #[test]
    fn unknown_field_rejected() {
        assert!(matches!(
            make_standard_field::<f64>("vortex_ring", &[]),
            Err(Error::UnknownField(_))
        ));
        assert!(make_standard_field::<f64>("constant", &[1.0]).is_err());
    }

    #[test]
    fn curl_potential_vanishes_outside_support() {
        let f = make_standard_field("curl_potential", &[2.0]).unwrap();
        let (c, r) = f.support().unwrap();
        assert!(r <= 2.0);
        for x in sample_points() {
            let y = add3(c, scale3(x, 1.5 * r / norm3(x).max(1e-9)));
            if norm3(sub3(y, c)) > r {
                assert_eq!(f.eval(y), [0.0; 3]);
                assert_eq!(f.grad(y), zero33());
            }
        }
    }

    #[test]
    fn sup_norms() {
        let c = make_standard_field("constant", &[1.0, 2.0, 3.0]).unwrap();
        let lat = Lattice::new([0.0; 3], [2.0 * PI; 3], 8);
        assert_eq!(sup_norm(&c, &lat).unwrap(), 3.0);
        let abc = make_standard_field("abc", &[1.0, 1.0, 1.0]).unwrap();
        assert!((sup_norm(&abc, &lat).unwrap() - 2.0).abs() < 1e-14);
        assert!((grad_sup_norm(&abc, &lat).unwrap() - 1.0).abs() < 1e-14);
        let zero = make_standard_field("constant", &[0.0, 0.0, 0.0]).unwrap();
        assert_eq!(sup_norm(&zero, &lat).unwrap(), 0.0);
        assert!(matches!(
            sup_norm(&abc, &Lattice::new([0.0; 3], [1.0; 3], 0)),
            Err(Error::EmptyLattice)
        ));
    }

    #[test]
    fn sup_norm_monotone_under_refinement() {
        let f = make_standard_field("abc", &[1.0, 0.6, 0.3]).unwrap();
        let mut lat = Lattice::new([0.1, -0.4, 0.2], [2.7, 1.9, 3.3], 3);
        let mut last = 0.0;
        for _ in 0..4 {
            let s = sup_norm(&f, &lat).unwrap();
            assert!(s >= last);
            last = s;
            lat = lat.refined();
        }
    }

    #[test]
    fn oscillation_examples() {
        let pts: Vec<Vec3<f64>> = (0..=10).map(|i| [0.3, i as f64 / 10.0, -0.2]).collect();
        let sampler = RegionSampler::new(pts).unwrap();
        let c = make_standard_field("constant", &[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(oscillation(&c, &sampler), 0.0);
        let s = make_standard_field("shear", &[]).unwrap();
        assert!((oscillation(&s, &sampler) - 1.0).abs() < 1e-15);
        assert!(RegionSampler::<f64>::new(vec![[0.0; 3]]).is_err());
    }

    #[test]
    fn oscillation_bounded_by_sup_norm() {
        let f = make_standard_field("abc", &[1.0, 1.0, 1.0]).unwrap();
        let pts: Vec<Vec3<f64>> = crate::quadrature::halton::<f64>(300, 3)
            .into_iter()
            .map(|p| scale3([p[0], p[1], p[2]], 2.0 * PI))
            .collect();
        let w = oscillation(&f, &RegionSampler::new(pts).unwrap());
        assert!(w <= 2.0 * 3f64.sqrt() * 2.0);
        assert!(w > 3.0);
    }

    #[test]
    fn lipschitz_bound_on_sampled_pairs() {
        // |u(x) − u(x′)| ≤ 3|∇u|_∞|x − x′|
        for f in all_standard() {
            let lat = Lattice::new([-2.0; 3], [2.0; 3], 16);
            let g = grad_sup_norm(&f, &lat).unwrap();
            let pts = sample_points();
            for a in &pts {
                for b in &pts {
                    let du = norm3(sub3(f.eval(*a), f.eval(*b)));
                    assert!(du <= 3.0 * g * norm3(sub3(*a, *b)) * (1.0 + 1e-9) + 1e-14);
                }
            }
        }
    }

    #[test]
    fn dilation_rescales_gradient() {
        let f = make_standard_field("abc", &[1.0, 0.5, 0.25]).unwrap();
        let d = Dilated {
            inner: f.clone(),
            factor: 2.0,
        };
        let x = [0.3, 1.1, -0.7];
        assert_eq!(d.eval(x), f.eval(scale3(x, 0.5)));
        let m: Mat3<f64> = d.grad(x);
        let m0 = f.grad(scale3(x, 0.5));
        for i in 0..3 {
            for j in 0..3 {
                assert!((m[i][j] - 0.5 * m0[i][j]).abs() < 1e-15);
            }
        }
    }
}
