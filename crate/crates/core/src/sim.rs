//! Pseudo-spectral integrator for `∂ₜu + u·∇u + ∇P = νΔu` on a periodic
//! box, with the trajectory diagnostics used by the pressure bounds.
//!
//! Time stepping is RK4 on the Leray-projected nonlinearity with an
//! integrating factor `e^{−νk²t}` for the viscous term. The nonlinearity is
//! dealiased by the 2/3 rule: a mode survives when `3|mₐ| < n` on every axis.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::grid::{gradient_from_spectrum, project_spectrum, Spectrum3};
use crate::fields::GridField;
use crate::pressure::grad_pressure_spectral;
use crate::scalar::*;
use crate::spectral::{Cplx, Spectral};

/// Largest admissible CFL number `dt·|u|_∞/h`.
pub const CFL_MAX: f64 = 0.5;
/// CFL number used when no step is given.
pub const CFL_DEFAULT: f64 = 0.25;
/// Per-step relative energy growth tolerated for `ν > 0`.
pub const ENERGY_TOL: f64 = 1e-10;
/// Euler runs are flagged once this fraction of the energy sits in the
/// outer third of the retained band.
pub const TAIL_SENTINEL: f64 = 1e-6;
/// Growth admitted by the small-data sup-norm bound `|u(t)|_∞ ≤ 9/8 |u⁰|_∞`.
pub const SUP_GROWTH: f64 = 9.0 / 8.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub t_final: f64,
    /// Fixed step; `None` picks `CFL_DEFAULT·h/|u⁰|_∞`, capped by `dt_max`.
    pub dt: Option<f64>,
    pub dt_max: f64,
    pub nu: f64,
    /// Emit diagnostics every this many steps (the final state is always
    /// emitted).
    pub diag_every: usize,
    /// `false` drops `u·∇u`, leaving the Stokes flow.
    pub nonlinear: bool,
    /// Keep the state every this many steps; `0` disables.
    pub checkpoint_every: usize,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            t_final: 1.0,
            dt: None,
            dt_max: 1e-2,
            nu: 1.0,
            diag_every: 1,
            nonlinear: true,
            checkpoint_every: 0,
        }
    }
}

/// A dealiased, divergence-free velocity at time `t`.
#[derive(Clone, Debug)]
pub struct SimState<T> {
    pub u: GridField<T>,
    pub t: T,
    pub nu: T,
    spec: Spectrum3<T>,
}

/// Precomputed transforms, wavenumbers and dealiasing mask for one grid.
pub struct Integrator<T: Real> {
    sp: Spectral<T>,
    n: usize,
    box_len: T,
    k2: Vec<T>,
    keep: Vec<bool>,
    nonlinear: bool,
}

impl<T: Real> Integrator<T> {
    pub fn new(n: usize, box_len: T, nonlinear: bool) -> Self {
        let sp = Spectral::cubic(n, box_len);
        let k2 = (0..sp.len()).map(|i| sp.k2(i)).collect();
        let keep = (0..sp.len())
            .map(|i| sp.modes(i).iter().all(|m| 3 * m.unsigned_abs() < n as u64))
            .collect();
        Self {
            sp,
            n,
            box_len,
            k2,
            keep,
            nonlinear,
        }
    }

    /// Projects and truncates `u` onto the dealiased solenoidal subspace.
    pub fn state(&self, u: &GridField<T>, t: T, nu: T) -> Result<SimState<T>> {
        if u.n() != self.n || u.box_len() != self.box_len {
            return Err(Error::InvalidParameter("grid does not match integrator".into()));
        }
        let mut spec = u.spectrum(&self.sp);
        self.truncate(&mut spec);
        project_spectrum(&self.sp, &mut spec);
        Ok(self.wrap(spec, t, nu))
    }

    fn wrap(&self, spec: Spectrum3<T>, t: T, nu: T) -> SimState<T> {
        let u = GridField::from_spectrum(self.n, self.box_len, &self.sp, &spec);
        SimState { u, t, nu, spec }
    }

    fn truncate(&self, spec: &mut Spectrum3<T>) {
        let zero = Cplx::new(T::zero(), T::zero());
        for c in spec.iter_mut() {
            for (v, k) in c.iter_mut().zip(&self.keep) {
                if !k {
                    *v = zero;
                }
            }
        }
    }

    /// `−P[u·∇u]`, dealiased.
    fn rhs(&self, spec: &Spectrum3<T>) -> Spectrum3<T> {
        let zero = Cplx::new(T::zero(), T::zero());
        if !self.nonlinear {
            return [0, 1, 2].map(|_| vec![zero; self.sp.len()]);
        }
        let u = [0, 1, 2].map(|c| self.sp.inverse_real(&spec[c]));
        let grad = gradient_from_spectrum(&self.sp, spec);
        let mut out = [0, 1, 2].map(|j| {
            let conv: Vec<T> = (0..self.sp.len())
                .map(|p| u[0][p] * grad[j][p] + u[1][p] * grad[3 + j][p] + u[2][p] * grad[6 + j][p])
                .collect();
            self.sp.forward_real(&conv)
        });
        self.truncate(&mut out);
        project_spectrum(&self.sp, &mut out);
        for c in out.iter_mut() {
            for v in c.iter_mut() {
                *v = -*v;
            }
        }
        out
    }

    /// CFL limit `CFL_MAX·h/|u|_∞` (infinite for the zero field).
    pub fn cfl_limit(&self, state: &SimState<T>) -> f64 {
        let s = state.u.sup_norm().to_f64_();
        if s > 0.0 {
            CFL_MAX * self.box_len.to_f64_() / self.n as f64 / s
        } else {
            f64::INFINITY
        }
    }

    /// One integrating-factor RK4 step.
    pub fn step(&self, state: &SimState<T>, dt: T) -> Result<SimState<T>> {
        let limit = self.cfl_limit(state);
        if !(dt > T::zero()) || dt.to_f64_() > limit * (1.0 + 1e-12) {
            return Err(Error::Cfl {
                dt: dt.to_f64_(),
                limit,
            });
        }
        let half = dt / T::lit(2.0);
        let e1: Vec<T> = self.k2.iter().map(|k| (-state.nu * *k * dt).exp()).collect();
        let e2: Vec<T> = self.k2.iter().map(|k| (-state.nu * *k * half).exp()).collect();
        let combine = |a: &Spectrum3<T>, f: &[T], b: &Spectrum3<T>, g: &[T], s: T| {
            [0, 1, 2].map(|c| {
                a[c].iter()
                    .zip(&b[c])
                    .zip(f.iter().zip(g))
                    .map(|((x, y), (fi, gi))| *x * *fi + *y * (*gi * s))
                    .collect::<Vec<_>>()
            })
        };
        let ones = vec![T::one(); self.k2.len()];
        let u0 = &state.spec;
        let k1 = self.rhs(u0);
        let k2 = self.rhs(&[0, 1, 2].map(|c| {
            u0[c]
                .iter()
                .zip(&k1[c])
                .zip(&e2)
                .map(|((x, y), e)| (*x + *y * half) * *e)
                .collect::<Vec<_>>()
        }));
        let k3 = self.rhs(&combine(u0, &e2, &k2, &ones, half));
        let k4 = self.rhs(&combine(u0, &e1, &k3, &e2, dt));
        let sixth = dt / T::lit(6.0);
        let two = T::lit(2.0);
        let mut next = [0, 1, 2].map(|c| {
            (0..self.k2.len())
                .map(|i| {
                    u0[c][i] * e1[i] + (k1[c][i] * e1[i] + (k2[c][i] + k3[c][i]) * (two * e2[i]) + k4[c][i]) * sixth
                })
                .collect::<Vec<_>>()
        });
        self.truncate(&mut next);
        project_spectrum(&self.sp, &mut next);
        let t = state.t + dt;
        let out = self.wrap(next, t, state.nu);
        if out.u.data().iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite(t.to_f64_()));
        }
        Ok(out)
    }

    /// Fraction of the energy in modes with `max|mₐ| > 2n/9`, the outer
    /// third of the retained band.
    pub fn tail_fraction(&self, state: &SimState<T>) -> f64 {
        let cut = 2 * self.n as u64;
        let (mut tail, mut total) = (0.0, 0.0);
        for i in 0..self.sp.len() {
            let e: f64 = state.spec.iter().map(|c| c[i].norm_sqr().to_f64_()).sum();
            total += e;
            if self.sp.modes(i).iter().any(|m| 9 * m.unsigned_abs() > cut) {
                tail += e;
            }
        }
        if total > 0.0 {
            tail / total
        } else {
            0.0
        }
    }

    pub fn keeps_mode(&self, idx: usize) -> bool {
        self.keep[idx]
    }

    pub fn spectrum_of<'a>(&self, state: &'a SimState<T>) -> &'a Spectrum3<T> {
        &state.spec
    }
}

/// One row of the trajectory table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub t: f64,
    pub sup_u: f64,
    pub sup_gradu: f64,
    pub sup_gradp: f64,
    pub energy: f64,
    /// `|∇P|_∞ / (|∇u|_∞ |u|_∞)`.
    pub r1: f64,
    /// `|u(t)|_∞ / |u⁰|_∞`.
    pub r2: f64,
    /// `|∇u(t)|_∞ / max_{s≤t} |u(s)|²_∞`.
    pub r3: f64,
    pub div_residual: f64,
}

pub const TRAJECTORY_HEADER: &str = "t,sup_u,sup_gradu,sup_gradP,energy,r1,r2,r3,div_residual";

impl Diagnostics {
    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{}",
            self.t,
            self.sup_u,
            self.sup_gradu,
            self.sup_gradp,
            self.energy,
            self.r1,
            self.r2,
            self.r3,
            self.div_residual
        )
    }
}

fn quotient(a: f64, b: f64) -> f64 {
    if b > 0.0 {
        a / b
    } else {
        f64::NAN
    }
}

/// Diagnostics of `state` given `|u⁰|_∞` and the running `max_{s≤t}|u(s)|_∞`.
pub fn diagnostics<T: Real>(state: &SimState<T>, sup0: f64, running_max: f64) -> Result<Diagnostics> {
    let sup_u = state.u.sup_norm().to_f64_();
    let sup_gradu = state.u.grad_sup_norm().to_f64_();
    let sup_gradp = grad_pressure_spectral(&state.u)?.grad_p.sup_norm().to_f64_();
    Ok(Diagnostics {
        t: state.t.to_f64_(),
        sup_u,
        sup_gradu,
        sup_gradp,
        energy: state.u.energy().to_f64_(),
        r1: quotient(sup_gradp, sup_gradu * sup_u),
        r2: quotient(sup_u, sup0),
        r3: quotient(sup_gradu, running_max * running_max),
        div_residual: state.u.divergence_residual().to_f64_(),
    })
}

#[derive(Clone, Debug)]
pub struct Trajectory<T> {
    pub rows: Vec<Diagnostics>,
    pub dt: f64,
    pub steps: usize,
    pub nu: f64,
    /// Largest per-step relative energy growth `(E₊ − E)/E`.
    pub max_energy_growth: f64,
    /// Largest `|∇·u|/|u|_∞` after any step.
    pub max_relative_divergence: f64,
    /// First time the Euler resolution sentinel tripped.
    pub unreliable_from: Option<f64>,
    /// `|u⁰|_∞ |u⁰|₂²`, the small-data quantity.
    pub smallness: f64,
    pub checkpoints: Vec<SimState<T>>,
}

impl<T> Trajectory<T> {
    pub fn csv(&self) -> String {
        let mut s = String::from(TRAJECTORY_HEADER);
        s.push('\n');
        for r in &self.rows {
            s.push_str(&r.csv_row());
            s.push('\n');
        }
        s
    }

    /// Energy never grew by more than [`ENERGY_TOL`] in one viscous step.
    pub fn energy_monotone(&self) -> bool {
        self.nu == 0.0 || self.max_energy_growth <= ENERGY_TOL
    }
}

/// Step size used by [`run`] for initial data `u0`.
pub fn default_dt<T: Real>(u0: &GridField<T>, cfg: &SimConfig) -> f64 {
    let h = u0.spacing().to_f64_();
    let s = u0.sup_norm().to_f64_();
    let dt = cfg.dt.unwrap_or(if s > 0.0 { CFL_DEFAULT * h / s } else { cfg.dt_max });
    dt.min(cfg.dt_max)
}

/// Integrates from `u0` to `cfg.t_final`.
pub fn run<T: Real>(u0: &GridField<T>, cfg: &SimConfig) -> Result<Trajectory<T>> {
    if !(cfg.t_final >= 0.0) || !(cfg.nu >= 0.0) || cfg.diag_every == 0 {
        return Err(Error::InvalidParameter(
            "t_final, ν must be non-negative and diag_every positive".into(),
        ));
    }
    let ig = Integrator::new(u0.n(), u0.box_len(), cfg.nonlinear);
    let mut state = ig.state(u0, T::zero(), T::lit(cfg.nu))?;
    let dt = default_dt(&state.u, cfg);
    if !(dt > 0.0) {
        return Err(Error::InvalidParameter("time step must be positive".into()));
    }
    let sup0 = state.u.sup_norm().to_f64_();
    let mut running = sup0;
    let l2 = state.u.l2_norm().to_f64_();
    let mut traj = Trajectory {
        rows: vec![diagnostics(&state, sup0, running)?],
        dt,
        steps: 0,
        nu: cfg.nu,
        max_energy_growth: 0.0,
        max_relative_divergence: state.u.relative_divergence().to_f64_(),
        unreliable_from: None,
        smallness: sup0 * l2 * l2,
        checkpoints: Vec::new(),
    };
    if cfg.checkpoint_every > 0 {
        traj.checkpoints.push(state.clone());
    }
    let n_steps = (cfg.t_final / dt - 1e-9).ceil().max(0.0) as usize;
    let mut energy = state.u.energy().to_f64_();
    for i in 1..=n_steps {
        let h = if i == n_steps {
            cfg.t_final - state.t.to_f64_()
        } else {
            dt
        };
        state = ig.step(&state, T::lit(h))?;
        let e = state.u.energy().to_f64_();
        if energy > 0.0 {
            traj.max_energy_growth = traj.max_energy_growth.max((e - energy) / energy);
        }
        energy = e;
        traj.max_relative_divergence = traj
            .max_relative_divergence
            .max(state.u.relative_divergence().to_f64_());
        running = running.max(state.u.sup_norm().to_f64_());
        if cfg.nu == 0.0 && traj.unreliable_from.is_none() && ig.tail_fraction(&state) > TAIL_SENTINEL {
            traj.unreliable_from = Some(state.t.to_f64_());
        }
        if i % cfg.diag_every == 0 || i == n_steps {
            traj.rows.push(diagnostics(&state, sup0, running)?);
        }
        if cfg.checkpoint_every > 0 && (i % cfg.checkpoint_every == 0 || i == n_steps) {
            traj.checkpoints.push(state.clone());
        }
    }
    traj.steps = n_steps;
    Ok(traj)
}

/// Relative margin for the `r₃` plateau test.
pub const PLATEAU_TOL: f64 = 0.01;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MonitorReport {
    /// `max r₁` along the run.
    pub beta_hat: f64,
    pub r2_max: f64,
    /// `r₂ ≤ 9/8 + 1e-3` up to `t0`.
    pub sup_growth_ok: bool,
    /// First diagnostic time after which `r₃` stays within [`PLATEAU_TOL`]
    /// of its running maximum.
    pub t0: Option<f64>,
    /// `t0` is earlier than the final time.
    pub t0_interior: bool,
    /// `max r₃` over `t ≥ t0`.
    pub beta2_hat: f64,
    pub smallness: f64,
    pub energy_monotone: bool,
    pub max_relative_divergence: f64,
    pub unreliable_from: Option<f64>,
    /// No row had `|u|_∞ > 0`, so every ratio is undefined.
    pub vacuous: bool,
}

pub fn monitor<T>(traj: &Trajectory<T>) -> Result<MonitorReport> {
    let rows = &traj.rows;
    if rows.is_empty() {
        return Err(Error::InvalidParameter("empty trajectory".into()));
    }
    let vacuous = rows.iter().all(|r| !(r.sup_u > 0.0));
    let fmax = |it: &mut dyn Iterator<Item = f64>| it.filter(|v| v.is_finite()).fold(0.0f64, f64::max);
    let beta_hat = fmax(&mut rows.iter().map(|r| r.r1));
    let r2_max = fmax(&mut rows.iter().map(|r| r.r2));
    let (t0, i0) = if vacuous {
        (None, rows.len())
    } else {
        let r3: Vec<f64> = rows.iter().map(|r| if r.r3.is_finite() { r.r3 } else { 0.0 }).collect();
        let mut suffix = vec![0.0f64; r3.len() + 1];
        for i in (0..r3.len()).rev() {
            suffix[i] = suffix[i + 1].max(r3[i]);
        }
        let mut prefix = 0.0f64;
        let mut found = r3.len() - 1;
        for i in 0..r3.len() {
            prefix = prefix.max(r3[i]);
            if suffix[i] <= prefix * (1.0 + PLATEAU_TOL) {
                found = i;
                break;
            }
        }
        (Some(rows[found].t), found)
    };
    let horizon = t0.unwrap_or(f64::INFINITY);
    let sup_growth_ok = rows
        .iter()
        .filter(|r| r.t <= horizon)
        .all(|r| !(r.r2 > SUP_GROWTH + 1e-3));
    let beta2_hat = fmax(&mut rows[i0.min(rows.len())..].iter().map(|r| r.r3));
    Ok(MonitorReport {
        beta_hat,
        r2_max,
        sup_growth_ok,
        t0,
        t0_interior: !vacuous && i0 + 1 < rows.len(),
        beta2_hat,
        smallness: traj.smallness,
        energy_monotone: traj.energy_monotone(),
        max_relative_divergence: traj.max_relative_divergence,
        unreliable_from: traj.unreliable_from,
        vacuous,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::{make_standard_field, random_solenoidal};
    use std::f64::consts::PI;

    fn tg(n: usize) -> GridField<f64> {
        GridField::sample(&make_standard_field("taylor_green", &[]).unwrap(), n, 2.0 * PI, false)
    }

    #[test]
    fn zero_field_stays_zero() {
        let ig = Integrator::<f64>::new(16, 2.0 * PI, true);
        let s = ig.state(&GridField::zeros(16, 2.0 * PI), 0.0, 1.0).unwrap();
        let s = ig.step(&s, 0.1).unwrap();
        assert_eq!(s.u.sup_norm(), 0.0);
        let traj = run(
            &GridField::<f64>::zeros(8, 1.0),
            &SimConfig {
                t_final: 0.05,
                ..Default::default()
            },
        )
        .unwrap();
        assert!(monitor(&traj).unwrap().vacuous);
    }

    #[test]
    fn stokes_mode_decays_by_exact_factor() {
        let u0 = GridField::sample(&make_standard_field("abc", &[]).unwrap(), 16, 2.0 * PI, false);
        let ig = Integrator::new(16, 2.0 * PI, false);
        let s = ig.state(&u0, 0.0, 1.0).unwrap();
        let s1 = ig.step(&s, 0.05).unwrap();
        let expect = u0.scaled((-0.05f64).exp());
        assert!(s1.u.max_abs_diff(&expect) < 1e-13);
    }

    #[test]
    fn taylor_green_decays_exponentially() {
        let u0 = tg(32);
        let traj = run(
            &u0,
            &SimConfig {
                t_final: 1.0,
                diag_every: 5,
                ..Default::default()
            },
        )
        .unwrap();
        let s0 = u0.sup_norm();
        for r in &traj.rows {
            assert!((r.sup_u - s0 * (-2.0 * r.t).exp()).abs() < 1e-6, "t={}", r.t);
        }
        assert!((traj.rows.last().unwrap().t - 1.0).abs() < 1e-12);
        assert!(traj.energy_monotone());
        assert!(traj.max_relative_divergence < 1e-9);
    }

    #[test]
    fn final_time_zero_gives_one_row() {
        let traj = run(
            &tg(16),
            &SimConfig {
                t_final: 0.0,
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(traj.rows.len(), 1);
        assert!(traj.csv().starts_with(TRAJECTORY_HEADER));
        assert_eq!(traj.csv().lines().count(), 2);
    }

    #[test]
    fn cfl_violation_is_rejected() {
        let u0 = tg(16);
        let ig = Integrator::new(16, 2.0 * PI, true);
        let s = ig.state(&u0, 0.0, 1.0).unwrap();
        assert!(matches!(ig.step(&s, 1.0), Err(Error::Cfl { .. })));
    }

    #[test]
    fn dealiased_modes_stay_zero() {
        let u0 = random_solenoidal(3, 4, 0.5, 16, 2.0 * PI).unwrap();
        let ig = Integrator::new(16, 2.0 * PI, true);
        let mut s = ig.state(&u0, 0.0, 1.0).unwrap();
        for _ in 0..3 {
            s = ig.step(&s, 0.01).unwrap();
        }
        let spec = ig.spectrum_of(&s);
        for i in 0..spec[0].len() {
            if !ig.keeps_mode(i) {
                assert!(spec.iter().all(|c| c[i].norm_sqr() == 0.0));
            }
        }
        assert!(s.u.relative_divergence() < 1e-9);
    }

    #[test]
    fn small_data_run_keeps_sup_bound() {
        let u0 = random_solenoidal(11, 2, 0.05, 16, 2.0 * PI).unwrap();
        let traj = run(
            &u0,
            &SimConfig {
                t_final: 1.0,
                diag_every: 4,
                ..Default::default()
            },
        )
        .unwrap();
        let rep = monitor(&traj).unwrap();
        assert!(rep.energy_monotone);
        assert!(rep.r2_max <= SUP_GROWTH + 1e-3);
        assert!(rep.t0.is_some() && rep.beta_hat.is_finite());
    }
}
