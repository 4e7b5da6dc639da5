//! Dyadic blocks, their boundary surfaces, the axial influence function
//! `h(x) = x₁/|x|³` and its level surfaces.
//!
//! All blocks are axisymmetric about the x₁-axis and described by an axial
//! interval and a radial interval in the `(x₁, r)` half-plane, with
//! `r = (x₂² + x₃²)^{1/2}`. Surfaces are parameterised over `[0, 1]²`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::RegionSampler;
use crate::quadrature::{composite_gauss_on, gauss_legendre, halton};
use crate::scalar::*;

/// Default truncation of `B_n` at `x₁ = −2^{n+K}`.
pub const DEFAULT_SHELL_TRUNCATION: i32 = 3;

/// Level caps stop short of the plane `x₁ = 0`, where the parameterisation
/// degenerates.
pub const DEFAULT_THETA_MAX_DEG: f64 = 89.0;

/// `h(x) = x₁ / |x|³`.
pub fn h_value<T: Real>(x: Vec3<T>) -> Result<T> {
    let r2 = dot3(x, x);
    if r2 == T::zero() {
        return Err(Error::Origin);
    }
    Ok(x[0] / (r2 * r2.sqrt()))
}

#[inline]
fn h_axial<T: Real>(x1: T, r: T) -> T {
    let r2 = x1 * x1 + r * r;
    x1 / (r2 * r2.sqrt())
}

/// Polar angle at which a level surface of `h` has a tangent plane containing
/// the x₁-direction: `tan²θ = 2`, i.e. the cone `x₂² + x₃² = 2x₁²`.
pub fn axial_tangency_angle<T: Real>() -> T {
    T::lit(2.0).sqrt().atan()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SurfaceKind {
    Rectangle,
    Disc,
    Annulus,
    CylinderSegment,
    LevelCap,
}

impl SurfaceKind {
    pub fn name(self) -> &'static str {
        match self {
            SurfaceKind::Rectangle => "rectangle",
            SurfaceKind::Disc => "disc",
            SurfaceKind::Annulus => "annulus",
            SurfaceKind::CylinderSegment => "cylinder_segment",
            SurfaceKind::LevelCap => "level_cap",
        }
    }

    fn azimuthal(self) -> bool {
        !matches!(self, SurfaceKind::Rectangle)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case")]
pub enum Shape<T> {
    /// `origin + s·edge_s + t·edge_t`.
    Rectangle {
        origin: Vec3<T>,
        edge_s: Vec3<T>,
        edge_t: Vec3<T>,
    },
    /// Plane `x₁ = x1`, `r_in ≤ r ≤ r_out`; a disc when `r_in = 0`.
    Annulus { x1: T, r_in: T, r_out: T },
    /// `x1_lo ≤ x₁ ≤ x1_hi`, `r = radius`, azimuth measured from `seam`.
    Cylinder { x1_lo: T, x1_hi: T, radius: T, seam: T },
    /// Part of `{h = level}` with polar angle in `[theta_lo, theta_hi]`.
    LevelCap { level: T, theta_lo: T, theta_hi: T },
}

/// Oriented parameterised patch.
///
/// Reference normals: `edge_s × edge_t` for rectangles, `+e₁` for planar
/// annuli, `+r̂` for cylinders and `∇h/|∇h|` for level caps. `reversed` flips
/// the normal.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Surface<T> {
    pub shape: Shape<T>,
    pub reversed: bool,
}

impl<T: Real> Surface<T> {
    pub fn rectangle(origin: Vec3<T>, edge_s: Vec3<T>, edge_t: Vec3<T>) -> Result<Self> {
        let ls = norm3(edge_s);
        let lt = norm3(edge_t);
        if ls == T::zero() || lt == T::zero() || norm3(cross3(edge_s, edge_t)) <= T::epsilon() * ls * lt {
            return Err(Error::Degenerate("rectangle with a zero-length side".into()));
        }
        Ok(Self::new(Shape::Rectangle { origin, edge_s, edge_t }))
    }

    pub fn disc(x1: T, radius: T) -> Result<Self> {
        Self::annulus(x1, T::zero(), radius)
    }

    pub fn annulus(x1: T, r_in: T, r_out: T) -> Result<Self> {
        if !(r_out > r_in) || r_in < T::zero() {
            return Err(Error::Degenerate(format!("annulus radii {r_in}..{r_out}")));
        }
        Ok(Self::new(Shape::Annulus { x1, r_in, r_out }))
    }

    pub fn cylinder(x1_lo: T, x1_hi: T, radius: T) -> Result<Self> {
        Self::cylinder_with_seam(x1_lo, x1_hi, radius, T::zero())
    }

    pub fn cylinder_with_seam(x1_lo: T, x1_hi: T, radius: T, seam: T) -> Result<Self> {
        if !(x1_hi > x1_lo) || !(radius > T::zero()) {
            return Err(Error::Degenerate(format!(
                "cylinder x₁ ∈ [{x1_lo}, {x1_hi}], r = {radius}"
            )));
        }
        Ok(Self::new(Shape::Cylinder {
            x1_lo,
            x1_hi,
            radius,
            seam,
        }))
    }

    fn new(shape: Shape<T>) -> Self {
        Self { shape, reversed: false }
    }

    pub fn reversed(mut self) -> Self {
        self.reversed = !self.reversed;
        self
    }

    pub fn kind(&self) -> SurfaceKind {
        match &self.shape {
            Shape::Rectangle { .. } => SurfaceKind::Rectangle,
            Shape::Annulus { r_in, .. } if *r_in == T::zero() => SurfaceKind::Disc,
            Shape::Annulus { .. } => SurfaceKind::Annulus,
            Shape::Cylinder { .. } => SurfaceKind::CylinderSegment,
            Shape::LevelCap { .. } => SurfaceKind::LevelCap,
        }
    }

    pub fn descriptor(&self) -> String {
        let sign = if self.reversed { "-" } else { "+" };
        match &self.shape {
            Shape::Rectangle { origin, edge_s, edge_t } => format!(
                "{sign}rectangle(o=({},{},{}),l=({},{}))",
                origin[0],
                origin[1],
                origin[2],
                norm3(*edge_s),
                norm3(*edge_t)
            ),
            Shape::Annulus { x1, r_in, r_out } => {
                format!("{sign}{}(x1={x1},r={r_in}..{r_out})", self.kind().name())
            }
            Shape::Cylinder {
                x1_lo, x1_hi, radius, ..
            } => format!("{sign}cylinder(x1={x1_lo}..{x1_hi},r={radius})"),
            Shape::LevelCap {
                level,
                theta_lo,
                theta_hi,
            } => format!("{sign}level_cap(h={level},θ={theta_lo}..{theta_hi})"),
        }
    }

    /// Position, the two parameter tangents and the oriented unit normal.
    pub fn frame(&self, s: T, t: T) -> (Vec3<T>, Vec3<T>, Vec3<T>, Vec3<T>) {
        let two_pi = T::TAU();
        let z = T::zero();
        let (p, ds, dt, mut nrm) = match &self.shape {
            Shape::Rectangle { origin, edge_s, edge_t } => {
                let p = add3(*origin, add3(scale3(*edge_s, s), scale3(*edge_t, t)));
                let n = cross3(*edge_s, *edge_t);
                (p, *edge_s, *edge_t, scale3(n, T::one() / norm3(n)))
            }
            Shape::Annulus { x1, r_in, r_out } => {
                let r = *r_in + (*r_out - *r_in) * s;
                let (sp, cp) = (two_pi * t).sin_cos();
                let p = [*x1, r * cp, r * sp];
                let ds = [z, (*r_out - *r_in) * cp, (*r_out - *r_in) * sp];
                let dt = [z, -two_pi * r * sp, two_pi * r * cp];
                (p, ds, dt, [T::one(), z, z])
            }
            Shape::Cylinder {
                x1_lo,
                x1_hi,
                radius,
                seam,
            } => {
                let phi = *seam + two_pi * t;
                let (sp, cp) = phi.sin_cos();
                let p = [*x1_lo + (*x1_hi - *x1_lo) * s, *radius * cp, *radius * sp];
                let ds = [*x1_hi - *x1_lo, z, z];
                let dt = [z, -two_pi * *radius * sp, two_pi * *radius * cp];
                (p, ds, dt, [z, cp, sp])
            }
            Shape::LevelCap {
                level,
                theta_lo,
                theta_hi,
            } => {
                let dtheta = *theta_hi - *theta_lo;
                let theta = *theta_lo + dtheta * s;
                let (st, ct) = theta.sin_cos();
                let (sp, cp) = (two_pi * t).sin_cos();
                let rho = (ct / *level).sqrt();
                let drho = -rho * st / (T::lit(2.0) * ct);
                let er = [ct, st * cp, st * sp];
                let et = [-st, ct * cp, ct * sp];
                let ep = [z, -sp, cp];
                let p = scale3(er, rho);
                let ds = scale3(add3(scale3(er, drho), scale3(et, rho)), dtheta);
                let dt = scale3(ep, two_pi * rho * st);
                let tan_half = st / (T::lit(2.0) * ct);
                let m = scale3(add3(er, scale3(et, tan_half)), -T::one());
                (p, ds, dt, scale3(m, T::one() / norm3(m)))
            }
        };
        if self.reversed {
            nrm = scale3(nrm, -T::one());
        }
        (p, ds, dt, nrm)
    }

    pub fn point(&self, s: T, t: T) -> Vec3<T> {
        self.frame(s, t).0
    }

    pub fn normal(&self, s: T, t: T) -> Vec3<T> {
        self.frame(s, t).3
    }

    /// Area element `|∂ₛX × ∂ₜX|`.
    pub fn jacobian(&self, s: T, t: T) -> T {
        let (_, ds, dt, _) = self.frame(s, t);
        norm3(cross3(ds, dt))
    }

    /// Deterministic sampler on an inclusive `m × m` parameter lattice,
    /// `m² ≥ count`.
    pub fn sampler(&self, count: usize) -> Result<RegionSampler<T>> {
        let m = ((count as f64).sqrt().ceil() as usize).max(2);
        let f = T::from_usize_(m - 1);
        let mut pts = Vec::with_capacity(m * m);
        for j in 0..m {
            for i in 0..m {
                pts.push(self.point(T::from_usize_(i) / f, T::from_usize_(j) / f));
            }
        }
        RegionSampler::new(pts)
    }

    /// Closed-form area where available, quadrature otherwise.
    pub fn area(&self) -> T {
        let pi = T::PI();
        match &self.shape {
            Shape::Rectangle { edge_s, edge_t, .. } => norm3(cross3(*edge_s, *edge_t)),
            Shape::Annulus { r_in, r_out, .. } => pi * (*r_out * *r_out - *r_in * *r_in),
            Shape::Cylinder {
                x1_lo, x1_hi, radius, ..
            } => T::TAU() * *radius * (*x1_hi - *x1_lo),
            Shape::LevelCap { .. } => {
                let q = surface_quadrature(self, 32);
                q.integrate(self, |_, _| T::one())
            }
        }
    }
}

/// `L_x = {h = level}` restricted to polar angles in `theta_range`.
pub fn level_surface<T: Real>(level: T, theta_range: (T, T)) -> Result<Surface<T>> {
    if !(level > T::zero()) {
        return Err(Error::NonPositiveLevel(level.to_f64_()));
    }
    let (lo, hi) = theta_range;
    if lo < T::zero() || !(hi < T::FRAC_PI_2()) || !(hi > lo) {
        return Err(Error::Degenerate(format!("θ range {lo}..{hi}")));
    }
    Ok(Surface::new(Shape::LevelCap {
        level,
        theta_lo: lo,
        theta_hi: hi,
    }))
}

/// Tensor-product rule on the parameter square.
#[derive(Clone, Debug, PartialEq)]
pub struct QuadratureRule<T> {
    pub nodes: Vec<(T, T)>,
    pub weights: Vec<T>,
    pub order: usize,
}

impl<T: Real> QuadratureRule<T> {
    /// `∫_S f dA = Σ wᵢ J(sᵢ, tᵢ) f(xᵢ, nᵢ)`.
    pub fn integrate(&self, surface: &Surface<T>, f: impl Fn(Vec3<T>, Vec3<T>) -> T) -> T {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&(s, t), &w)| {
                let (p, ds, dt, n) = surface.frame(s, t);
                w * norm3(cross3(ds, dt)) * f(p, n)
            })
            .sum()
    }
}

/// Gauss–Legendre in `s`; in the azimuthal direction of rotational surfaces a
/// `2·order`-point periodic midpoint rule, otherwise Gauss–Legendre.
pub fn surface_quadrature<T: Real>(surface: &Surface<T>, order: usize) -> QuadratureRule<T> {
    let order = order.max(1);
    let (xs, ws) = gauss_legendre::<T>(order);
    let (xt, wt) = if surface.kind().azimuthal() {
        let m = 2 * order;
        let h = T::one() / T::from_usize_(m);
        (
            (0..m).map(|i| (T::from_usize_(i) + T::lit(0.5)) * h).collect(),
            vec![h; m],
        )
    } else {
        gauss_legendre::<T>(order)
    };
    let mut nodes = Vec::with_capacity(xs.len() * xt.len());
    let mut weights = Vec::with_capacity(xs.len() * xt.len());
    for (t, wt) in xt.iter().zip(&wt) {
        for (s, ws) in xs.iter().zip(&ws) {
            nodes.push((*s, *t));
            weights.push(*ws * *wt);
        }
    }
    QuadratureRule { nodes, weights, order }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BlockKind {
    /// `C_n = {2ⁿ < x₁ < 2ⁿ⁺¹, r < 2ⁿ⁺¹}`.
    Cylinder,
    /// `B_n = {x₁ < 2ⁿ, 2ⁿ < r < 2ⁿ⁺¹}`, truncated below.
    Shell,
    /// Any other axisymmetric box.
    Custom,
}

/// Axisymmetric region `{x1_lo < x₁ < x1_hi, r_in < r < r_out}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Block<T> {
    pub kind: BlockKind,
    pub n: i32,
    pub x1_lo: T,
    pub x1_hi: T,
    pub r_in: T,
    pub r_out: T,
}

/// `C_n` for [`BlockKind::Cylinder`], `B_n` truncated at `−2^{n+3}` for
/// [`BlockKind::Shell`].
pub fn block<T: Real>(kind: BlockKind, n: i32) -> Result<Block<T>> {
    match kind {
        BlockKind::Cylinder => Ok(Block::cylinder(n)),
        BlockKind::Shell => Ok(Block::shell(n, DEFAULT_SHELL_TRUNCATION)),
        BlockKind::Custom => Err(Error::InvalidParameter(
            "custom blocks are built with Block::custom".into(),
        )),
    }
}

impl<T: Real> Block<T> {
    pub fn cylinder(n: i32) -> Self {
        Self {
            kind: BlockKind::Cylinder,
            n,
            x1_lo: T::pow2(n),
            x1_hi: T::pow2(n + 1),
            r_in: T::zero(),
            r_out: T::pow2(n + 1),
        }
    }

    /// `B_n ∩ {x₁ > −2^{n+k}}`.
    pub fn shell(n: i32, truncation: i32) -> Self {
        Self {
            kind: BlockKind::Shell,
            n,
            x1_lo: -T::pow2(n + truncation),
            x1_hi: T::pow2(n),
            r_in: T::pow2(n),
            r_out: T::pow2(n + 1),
        }
    }

    /// `B_n ∩ {x₁ > 0}`, the shell piece of the half-space tiling.
    pub fn half_shell(n: i32) -> Self {
        Self {
            kind: BlockKind::Shell,
            n,
            x1_lo: T::zero(),
            x1_hi: T::pow2(n),
            r_in: T::pow2(n),
            r_out: T::pow2(n + 1),
        }
    }

    pub fn custom(x1_lo: T, x1_hi: T, r_in: T, r_out: T) -> Result<Self> {
        if !(x1_hi > x1_lo) || !(r_out > r_in) || r_in < T::zero() {
            return Err(Error::Degenerate("empty axisymmetric block".into()));
        }
        Ok(Self {
            kind: BlockKind::Custom,
            n: 0,
            x1_lo,
            x1_hi,
            r_in,
            r_out,
        })
    }

    /// Reflection through the plane `x₁ = 0`.
    pub fn mirrored(&self) -> Self {
        Self {
            x1_lo: -self.x1_hi,
            x1_hi: -self.x1_lo,
            ..self.clone()
        }
    }

    pub fn descriptor(&self) -> String {
        let name = match self.kind {
            BlockKind::Cylinder => "C",
            BlockKind::Shell => "B",
            BlockKind::Custom => "block",
        };
        format!(
            "{name}{}(x1={}..{},r={}..{})",
            self.n, self.x1_lo, self.x1_hi, self.r_in, self.r_out
        )
    }

    /// Open-set membership.
    pub fn contains(&self, x: Vec3<T>) -> bool {
        let r2 = x[1] * x[1] + x[2] * x[2];
        x[0] > self.x1_lo
            && x[0] < self.x1_hi
            && (self.r_in == T::zero() || r2 > self.r_in * self.r_in)
            && r2 < self.r_out * self.r_out
    }

    pub fn volume(&self) -> T {
        T::PI() * (self.r_out * self.r_out - self.r_in * self.r_in) * (self.x1_hi - self.x1_lo)
    }

    pub fn diameter(&self) -> T {
        let a = self.x1_hi - self.x1_lo;
        let b = T::lit(2.0) * self.r_out;
        (a * a + b * b).sqrt()
    }

    /// The centroid for solid cylinders, the mid-radius point at `φ = 0`
    /// for shells. Used as the default Galilean reference.
    pub fn reference_point(&self) -> Vec3<T> {
        let half = T::lit(0.5);
        let r = if self.r_in == T::zero() {
            T::zero()
        } else {
            half * (self.r_in + self.r_out)
        };
        [half * (self.x1_lo + self.x1_hi), r, T::zero()]
    }

    /// Outward-oriented boundary: end faces, outer and (if any) inner cylinder.
    pub fn boundary(&self) -> Vec<Surface<T>> {
        let mut out = vec![
            Surface::annulus(self.x1_lo, self.r_in, self.r_out)
                .expect("valid block")
                .reversed(),
            Surface::annulus(self.x1_hi, self.r_in, self.r_out).expect("valid block"),
            Surface::cylinder(self.x1_lo, self.x1_hi, self.r_out).expect("valid block"),
        ];
        if self.r_in > T::zero() {
            out.push(
                Surface::cylinder(self.x1_lo, self.x1_hi, self.r_in)
                    .expect("valid block")
                    .reversed(),
            );
        }
        out
    }

    /// Halton points in the block (uniform in volume) plus the corners of
    /// the `(x₁, r, φ)` parameter box.
    pub fn sampler(&self, count: usize) -> Result<RegionSampler<T>> {
        let mut pts = Vec::with_capacity(count + 16);
        let (ri2, ro2) = (self.r_in * self.r_in, self.r_out * self.r_out);
        for p in halton::<T>(count, 3) {
            let x1 = self.x1_lo + (self.x1_hi - self.x1_lo) * p[0];
            let r = (ri2 + (ro2 - ri2) * p[1]).sqrt();
            let (sp, cp) = (T::TAU() * p[2]).sin_cos();
            pts.push([x1, r * cp, r * sp]);
        }
        for x1 in [self.x1_lo, self.x1_hi] {
            for r in [self.r_in, self.r_out] {
                for q in 0..4 {
                    let (sp, cp) = (T::FRAC_PI_2() * T::from_usize_(q)).sin_cos();
                    pts.push([x1, r * cp, r * sp]);
                }
            }
        }
        RegionSampler::new(pts)
    }

    /// `(inf, sup)` of `h` over the block closure.
    pub fn h_range(&self) -> Result<(T, T)> {
        if self.r_in == T::zero() && self.x1_lo <= T::zero() && self.x1_hi >= T::zero() {
            return Err(Error::BlockTouchesOrigin);
        }
        let inv_sqrt2 = T::one() / T::lit(2.0).sqrt();
        let mut cands = Vec::new();
        for x1 in [self.x1_lo, self.x1_hi] {
            for r in [self.r_in, self.r_out] {
                cands.push(h_axial(x1, r));
            }
        }
        // interior critical points of x₁ ↦ h(x₁, r) on the radial edges
        for r in [self.r_in, self.r_out] {
            for x1 in [r * inv_sqrt2, -r * inv_sqrt2] {
                if r > T::zero() && x1 > self.x1_lo && x1 < self.x1_hi {
                    cands.push(h_axial(x1, r));
                }
            }
        }
        let lo = cands.iter().copied().fold(T::infinity(), T::min);
        let hi = cands.iter().copied().fold(T::neg_infinity(), T::max);
        Ok((lo, hi))
    }

    /// Cylindrical-coordinate volume rule: composite Gauss–Legendre in `x₁`
    /// and `r` (`order` nodes per panel), periodic midpoint in `φ`. Panel
    /// counts follow the block aspect so node spacing is roughly uniform.
    pub fn volume_rule(&self, order: usize, panels_per_scale: usize) -> VolumeRule<T> {
        let scale = T::pow2(self.n).max((self.r_out - self.r_in).min(self.x1_hi - self.x1_lo));
        let count = |len: T| -> usize {
            let v = (len / scale).to_f64_().ceil() as usize;
            (v * panels_per_scale).max(1)
        };
        let (xs, wx) = composite_gauss_on(count(self.x1_hi - self.x1_lo), order, self.x1_lo, self.x1_hi);
        let (rs, wr) = composite_gauss_on(count(self.r_out - self.r_in), order, self.r_in, self.r_out);
        let circumference = T::TAU() * self.r_out;
        let nphi = (count(circumference) * order).max(8);
        let hphi = T::TAU() / T::from_usize_(nphi);
        let mut points = Vec::with_capacity(xs.len() * rs.len() * nphi);
        let mut weights = Vec::with_capacity(points.capacity());
        let trig: Vec<(T, T)> = (0..nphi)
            .map(|k| (hphi * (T::from_usize_(k) + T::lit(0.5))).sin_cos())
            .collect();
        for (x1, w1) in xs.iter().zip(&wx) {
            for (r, w2) in rs.iter().zip(&wr) {
                for &(sp, cp) in &trig {
                    points.push([*x1, *r * cp, *r * sp]);
                    weights.push(*w1 * *w2 * *r * hphi);
                }
            }
        }
        VolumeRule { points, weights }
    }
}

/// Point/weight list for a volume integral.
#[derive(Clone, Debug, PartialEq)]
pub struct VolumeRule<T> {
    pub points: Vec<Vec3<T>>,
    pub weights: Vec<T>,
}

impl<T: Real> VolumeRule<T> {
    pub fn integrate(&self, f: impl Fn(Vec3<T>) -> T) -> T {
        self.points.iter().zip(&self.weights).map(|(p, w)| *w * f(*p)).sum()
    }
}

/// Subintervals of `[lo, hi]` where every condition is positive. Roots are
/// bracketed on a uniform scan of `scan` cells and refined by bisection.
pub(crate) fn positive_intervals<T: Real>(lo: T, hi: T, conds: &[&dyn Fn(T) -> T], scan: usize) -> Vec<(T, T)> {
    let mut cuts = vec![lo, hi];
    let step = (hi - lo) / T::from_usize_(scan);
    for f in conds {
        let mut a = lo;
        let mut fa = f(a);
        for i in 1..=scan {
            let b = if i == scan { hi } else { lo + step * T::from_usize_(i) };
            let fb = f(b);
            if fa == T::zero() {
                cuts.push(a);
            } else if fa * fb < T::zero() {
                let (mut x0, mut x1, mut f0) = (a, b, fa);
                for _ in 0..200 {
                    let mid = T::lit(0.5) * (x0 + x1);
                    if mid <= x0 || mid >= x1 {
                        break;
                    }
                    let fm = f(mid);
                    if (fm < T::zero()) == (f0 < T::zero()) {
                        x0 = mid;
                        f0 = fm;
                    } else {
                        x1 = mid;
                    }
                }
                cuts.push(T::lit(0.5) * (x0 + x1));
            }
            a = b;
            fa = fb;
        }
        if fa == T::zero() {
            cuts.push(hi);
        }
    }
    cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    cuts.dedup();
    let mut out: Vec<(T, T)> = Vec::new();
    for w in cuts.windows(2) {
        let (a, b) = (w[0], w[1]);
        if !(b > a) {
            continue;
        }
        let mid = T::lit(0.5) * (a + b);
        if conds.iter().all(|f| f(mid) > T::zero()) {
            match out.last_mut() {
                Some(last) if last.1 == a => last.1 = b,
                _ => out.push((a, b)),
            }
        }
    }
    out
}

const SCAN: usize = 1024;

/// `L_level ∩ block` as one or two level caps (normal along `∇h`).
pub fn level_cap_in_block<T: Real>(blk: &Block<T>, level: T, theta_max: T) -> Result<Vec<Surface<T>>> {
    if !(level > T::zero()) {
        return Err(Error::NonPositiveLevel(level.to_f64_()));
    }
    let inv = T::one() / level.sqrt();
    let x1 = move |th: T| th.cos().powf(T::lit(1.5)) * inv;
    let r = move |th: T| th.sin() * th.cos().sqrt() * inv;
    let c1 = |th: T| x1(th) - blk.x1_lo;
    let c2 = |th: T| blk.x1_hi - x1(th);
    let c3 = |th: T| r(th) - blk.r_in;
    let c4 = |th: T| blk.r_out - r(th);
    let conds: [&dyn Fn(T) -> T; 4] = [&c1, &c2, &c3, &c4];
    let pieces = positive_intervals(T::zero(), theta_max, &conds, SCAN);
    if pieces.is_empty() {
        return Err(Error::EmptyIntersection);
    }
    Ok(pieces
        .into_iter()
        .map(|(a, b)| {
            Surface::new(Shape::LevelCap {
                level,
                theta_lo: a,
                theta_hi: b,
            })
        })
        .collect())
}

/// Splits level caps at the given polar angles.
pub fn split_caps<T: Real>(caps: &[Surface<T>], cuts: &[T]) -> Vec<Surface<T>> {
    let mut out = Vec::new();
    for cap in caps {
        if let Shape::LevelCap {
            level,
            theta_lo,
            theta_hi,
        } = cap.shape
        {
            let mut edges = vec![theta_lo];
            edges.extend(cuts.iter().copied().filter(|c| *c > theta_lo && *c < theta_hi));
            edges.push(theta_hi);
            for w in edges.windows(2) {
                out.push(Surface {
                    shape: Shape::LevelCap {
                        level,
                        theta_lo: w[0],
                        theta_hi: w[1],
                    },
                    reversed: cap.reversed,
                });
            }
        } else {
            out.push(cap.clone());
        }
    }
    out
}

/// Outward boundary of `{y ∈ block : h(y) ≤ level}` for a block in the closed
/// half-space `x₁ ≥ 0`.
pub fn sublevel_boundary<T: Real>(blk: &Block<T>, level: T, theta_max: T) -> Result<Vec<Surface<T>>> {
    if blk.x1_lo < T::zero() {
        return Err(Error::InvalidParameter(
            "sublevel slicing needs a block in x₁ ≥ 0".into(),
        ));
    }
    if !(level > T::zero()) {
        return Err(Error::NonPositiveLevel(level.to_f64_()));
    }
    let mut out = Vec::new();
    // end faces: h(x₁, r) ≤ level ⇔ r ≥ r*(x₁)
    for (x1, outward_plus) in [(blk.x1_lo, false), (blk.x1_hi, true)] {
        let rstar = if x1 > T::zero() {
            let v = (x1 / level).powf(T::lit(2.0 / 3.0)) - x1 * x1;
            if v > T::zero() {
                v.sqrt()
            } else {
                T::zero()
            }
        } else {
            T::zero()
        };
        let r_lo = rstar.max(blk.r_in);
        if r_lo < blk.r_out {
            let s = Surface::annulus(x1, r_lo, blk.r_out)?;
            out.push(if outward_plus { s } else { s.reversed() });
        }
    }
    // lateral cylinders
    let mut radii = vec![(blk.r_out, false)];
    if blk.r_in > T::zero() {
        radii.push((blk.r_in, true));
    }
    for (radius, inward) in radii {
        let g = move |x1: T| level - h_axial(x1, radius);
        let conds: [&dyn Fn(T) -> T; 1] = [&g];
        for (a, b) in positive_intervals(blk.x1_lo, blk.x1_hi, &conds, SCAN) {
            let s = Surface::cylinder(a, b, radius)?;
            out.push(if inward { s.reversed() } else { s });
        }
    }
    match level_cap_in_block(blk, level, theta_max) {
        Ok(caps) => out.extend(caps),
        Err(Error::EmptyIntersection) => {}
        Err(e) => return Err(e),
    }
    Ok(out)
}

pub fn theta_max_default<T: Real>() -> T {
    T::lit(DEFAULT_THETA_MAX_DEG.to_radians())
}
