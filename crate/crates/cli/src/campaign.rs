//! Verification campaigns: field censuses crossed with regions, dispatched
//! to the bound checks of `pprobe-core`.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use pprobe_core::fields::{
    make_standard_field, random_solenoidal, FourierModes, GridField, Lattice, RegionSampler, VelocityField,
};
use pprobe_core::flux::{
    charge_bound_check, level_cap_flux_check, rectangle_bound_check, surface_bound_check, surfaces_sampler, BoundCheck,
    CheckOptions, CSV_HEADER,
};
use pprobe_core::geometry::{level_cap_in_block, theta_max_default, Block, Surface, DEFAULT_SHELL_TRUNCATION};
use pprobe_core::pressure::{
    dipole_bound_check, grad_pressure_spectral, theorem11_check_blocks, theorem11_check_grid, DyadicOptions,
    VolumeOrder,
};
use pprobe_core::semigroup::{
    duhamel_gradient_bound_check, duhamel_sup_check, heat_gradient_bound_check, smoothed_step, DuhamelOptions,
    PeriodicGrid, TimeConstant,
};
use pprobe_core::Error;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::RunConfig;
use crate::seeds::item_seed;
use crate::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Lemma {
    Rectangle,
    OpenSurface,
    Charge,
    LevelCap,
    Dipole,
    Heat,
    Duhamel,
    Theorem,
}

impl Lemma {
    pub const ALL: [Lemma; 8] = [
        Lemma::Rectangle,
        Lemma::OpenSurface,
        Lemma::Charge,
        Lemma::LevelCap,
        Lemma::Dipole,
        Lemma::Heat,
        Lemma::Duhamel,
        Lemma::Theorem,
    ];

    pub fn id(self) -> &'static str {
        match self {
            Lemma::Rectangle => "2.1",
            Lemma::OpenSurface => "2.2",
            Lemma::Charge => "2.3",
            Lemma::LevelCap => "2.4",
            Lemma::Dipole => "2.5",
            Lemma::Heat => "3.1",
            Lemma::Duhamel => "3.2",
            Lemma::Theorem => "thm1.1",
        }
    }

    /// Random-field census size when the config leaves it open.
    pub fn default_count(self) -> usize {
        match self {
            Lemma::Heat | Lemma::Duhamel => 10,
            Lemma::Theorem => 50,
            _ => 100,
        }
    }

    fn is_static(self) -> bool {
        matches!(
            self,
            Lemma::Rectangle | Lemma::OpenSurface | Lemma::Charge | Lemma::LevelCap | Lemma::Dipole
        )
    }
}

impl fmt::Display for Lemma {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for Lemma {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        let l = match s {
            "2.1" => Lemma::Rectangle,
            "2.2" => Lemma::OpenSurface,
            "2.3" | "2.3c" => Lemma::Charge,
            "2.4" => Lemma::LevelCap,
            "2.5" => Lemma::Dipole,
            "3.1" => Lemma::Heat,
            "3.2" => Lemma::Duhamel,
            "thm1.1" | "1.1" => Lemma::Theorem,
            other => {
                return Err(CliError::Usage(format!(
                    "unknown lemma `{other}` (expected one of 2.1 2.2 2.3 2.4 2.5 3.1 3.2 thm1.1)"
                )))
            }
        };
        Ok(l)
    }
}

/// One check with its census item and dyadic index.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Row {
    pub item: usize,
    pub n: Option<i32>,
    pub check: BoundCheck,
}

pub const ROW_HEADER: &str = "lemma,field,region,lhs,rhs_factor,ratio,stable,n";

impl Row {
    pub fn csv_row(&self) -> String {
        let n = self.n.map(|v| v.to_string()).unwrap_or_default();
        format!("{},{n}", self.check.csv_row())
    }
}

/// `(field, t, ratio)` sample of a time-dependent check.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SeriesPoint {
    pub field: String,
    pub lemma: String,
    pub t: f64,
    pub ratio: f64,
}

/// Dyadic term of the block route: `(field, n, term, partial sum)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PartialSum {
    pub field: String,
    pub n: i32,
    pub term: f64,
    pub partial: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Summary {
    pub lemma: String,
    pub items: usize,
    pub checks: usize,
    /// Largest finite ratio: the empirical constant of the bound.
    pub empirical_constant: f64,
    /// The same over the first half of the census items.
    pub half_census_constant: f64,
    /// `|full − half| / full`.
    pub census_drift: f64,
    pub all_finite: bool,
    pub all_stable: bool,
    pub vacuous: usize,
    pub extras: BTreeMap<String, f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Campaign {
    pub rows: Vec<Row>,
    pub series: Vec<SeriesPoint>,
    pub partial_sums: Vec<PartialSum>,
    pub summary: Summary,
}

impl Campaign {
    pub fn csv(&self) -> String {
        let mut s = format!("{ROW_HEADER}\n");
        for r in &self.rows {
            s.push_str(&r.csv_row());
            s.push('\n');
        }
        s
    }

    pub fn series_csv(&self) -> String {
        let mut s = String::from("lemma,field,t,ratio\n");
        for p in &self.series {
            s.push_str(&format!("{},{},{:e},{:e}\n", p.lemma, p.field, p.t, p.ratio));
        }
        s
    }

    pub fn partial_sums_csv(&self) -> String {
        let mut s = String::from("field,n,term,partial\n");
        for p in &self.partial_sums {
            s.push_str(&format!("{},{},{:e},{:e}\n", p.field, p.n, p.term, p.partial));
        }
        s
    }

    /// Exit-code predicate: every check finite and refinement-stable.
    pub fn passed(&self) -> bool {
        self.summary.all_finite && self.summary.all_stable
    }
}

fn summarize(lemma: Lemma, items: usize, rows: &[Row]) -> Summary {
    let finite_max = |it: &mut dyn Iterator<Item = f64>| it.filter(|v| v.is_finite()).fold(0.0f64, f64::max);
    let full = finite_max(&mut rows.iter().map(|r| r.check.ratio));
    let half_items = items.div_ceil(2);
    let half = finite_max(&mut rows.iter().filter(|r| r.item < half_items).map(|r| r.check.ratio));
    Summary {
        lemma: lemma.id().into(),
        items,
        checks: rows.len(),
        empirical_constant: full,
        half_census_constant: half,
        census_drift: if full > 0.0 { (full - half).abs() / full } else { 0.0 },
        all_finite: rows.iter().all(|r| r.check.ratio.is_finite()),
        all_stable: rows.iter().all(|r| r.check.refinement_stable),
        vacuous: rows.iter().filter(|r| r.check.is_vacuous()).count(),
        extras: BTreeMap::new(),
    }
}

fn census_size(cfg: &RunConfig, lemma: Lemma) -> usize {
    if cfg.field.name == "random" {
        cfg.census.count.unwrap_or(lemma.default_count())
    } else {
        1
    }
}

fn analytic_field(cfg: &RunConfig, item: usize) -> Result<Box<dyn VelocityField<f64>>, CliError> {
    let f = &cfg.field;
    Ok(if f.name == "random" {
        Box::new(FourierModes::random(
            item_seed(cfg.seed, item),
            f.k_max,
            f.amplitude,
            cfg.census.period,
        ))
    } else {
        Box::new(make_standard_field(&f.name, &f.params)?)
    })
}

/// The periodic velocity grid of census item `item`.
pub fn grid_field(cfg: &RunConfig, item: usize) -> Result<GridField<f64>, CliError> {
    let f = &cfg.field;
    let g = &cfg.grid;
    if f.name == "random" {
        if f.k_max == 0 {
            return Ok(GridField::zeros(g.n, g.box_l));
        }
        return Ok(random_solenoidal(
            item_seed(cfg.seed, item),
            f.k_max,
            f.amplitude,
            g.n,
            g.box_l,
        )?);
    }
    let field = make_standard_field(&f.name, &f.params)?;
    let grid = GridField::sample(&field, g.n, g.box_l, g.centered);
    Ok(if f.project { grid.leray_project() } else { grid })
}

fn rectangles(n: i32) -> Result<Vec<Surface<f64>>, Error> {
    let s = 2f64.powi(n);
    Ok(vec![
        Surface::rectangle([s, -s / 2.0, -s / 2.0], [0.0, s, 0.0], [0.0, 0.0, s])?,
        Surface::rectangle([0.0, 0.0, 0.0], [s, 0.0, 0.0], [0.0, s / 2.0, s / 2.0])?,
    ])
}

fn open_surfaces(n: i32) -> Result<Vec<Surface<f64>>, Error> {
    let s = 2f64.powi(n);
    Ok(vec![
        Surface::disc(0.0, s)?,
        Surface::annulus(s / 2.0, s / 2.0, s)?,
        Surface::cylinder(0.0, s, s)?,
    ])
}

fn charge_blocks(n: i32) -> Vec<Block<f64>> {
    vec![
        Block::cylinder(n),
        Block::shell(n, DEFAULT_SHELL_TRUNCATION),
        Block::half_shell(n),
    ]
}

/// Surface sampler lattice side, doubled per scale above `n = 0` so the
/// spacing stays fixed in physical units.
fn surface_lattice(cfg: &RunConfig, n: i32) -> usize {
    cfg.region.surface_samples << n.clamp(0, 3)
}

/// Block sampler size, growing with the block area.
fn block_samples(cfg: &RunConfig, n: i32) -> usize {
    (cfg.region.block_samples << (2 * n.clamp(0, 3))).min(8192)
}

fn static_checks(
    lemma: Lemma,
    field: &dyn VelocityField<f64>,
    n: i32,
    cfg: &RunConfig,
) -> Result<Vec<BoundCheck>, CliError> {
    let opts = CheckOptions {
        order: cfg.quadrature.order,
        ..CheckOptions::default()
    };
    let m = surface_lattice(cfg, n);
    let block_count = block_samples(cfg, n);
    let volume = VolumeOrder {
        order: cfg.quadrature.volume_order,
        panels: cfg.quadrature.volume_panels,
    };
    let mut out = Vec::new();
    match lemma {
        Lemma::Rectangle => {
            for r in rectangles(n)? {
                out.push(rectangle_bound_check(field, &r, &r.sampler(m)?, &opts)?);
            }
        }
        Lemma::OpenSurface => {
            for s in open_surfaces(n)? {
                out.push(surface_bound_check(field, &s, &s.sampler(m)?, &opts)?);
            }
        }
        Lemma::Charge => {
            for b in charge_blocks(n) {
                out.push(charge_bound_check(field, &b, &b.sampler(block_count)?, &opts));
            }
        }
        Lemma::LevelCap => {
            let theta = theta_max_default::<f64>();
            for b in [Block::cylinder(n), Block::half_shell(n)] {
                let (lo, hi): (f64, f64) = b.h_range()?;
                for frac in [0.3, 0.6] {
                    let level = lo.max(0.0) + frac * (hi - lo.max(0.0));
                    let caps = match level_cap_in_block(&b, level, theta) {
                        Ok(c) => c,
                        Err(Error::EmptyIntersection) => continue,
                        Err(e) => return Err(e.into()),
                    };
                    let sampler = surfaces_sampler(&caps, m)?;
                    out.push(level_cap_flux_check(field, &b, level, theta, &sampler, &opts)?);
                }
            }
        }
        Lemma::Dipole => {
            for b in [Block::cylinder(n), Block::half_shell(n)] {
                let sampler: RegionSampler<f64> = b.sampler(block_count)?;
                out.push(dipole_bound_check(field, &b, &sampler, volume)?);
            }
        }
        _ => unreachable!("not a static lemma"),
    }
    Ok(out)
}

fn heat_times(cfg: &RunConfig, grid: &PeriodicGrid<f64>) -> Vec<f64> {
    cfg.heat.times.clone().unwrap_or_else(|| {
        let h = grid.aliasing_horizon();
        [0.1, 0.25, 0.5, 1.0].iter().map(|f| f * h).collect()
    })
}

fn heat_grid(cfg: &RunConfig, item: usize) -> Result<(PeriodicGrid<f64>, String), CliError> {
    if cfg.field.name == "step" {
        let g = smoothed_step(cfg.heat.step_n, cfg.grid.box_l, cfg.heat.step_eps, 3);
        return Ok((g, format!("step(eps={})", cfg.heat.step_eps)));
    }
    let g = grid_field(cfg, item)?;
    let name = match g.seed {
        Some(s) => format!("random(seed={s},k_max={})", cfg.field.k_max),
        None => cfg.field.name.clone(),
    };
    Ok((PeriodicGrid::from_grid_field(&g), name))
}

struct ItemOutput {
    rows: Vec<Row>,
    series: Vec<SeriesPoint>,
    partial_sums: Vec<PartialSum>,
    extras: BTreeMap<String, f64>,
}

fn run_item(lemma: Lemma, cfg: &RunConfig, item: usize) -> Result<ItemOutput, CliError> {
    let mut out = ItemOutput {
        rows: Vec::new(),
        series: Vec::new(),
        partial_sums: Vec::new(),
        extras: BTreeMap::new(),
    };
    let row = |n, check| Row { item, n, check };
    if lemma.is_static() {
        let field = analytic_field(cfg, item)?;
        for n in cfg.region.n_min..=cfg.region.n_max {
            for c in static_checks(lemma, field.as_ref(), n, cfg)? {
                out.rows.push(row(Some(n), c));
            }
        }
        return Ok(out);
    }
    match lemma {
        Lemma::Heat => {
            let (g, name) = heat_grid(cfg, item)?;
            let times = heat_times(cfg, &g);
            let (c, series) = heat_gradient_bound_check(&g, &times, &name)?;
            out.series.extend(series.into_iter().map(|(t, ratio)| SeriesPoint {
                field: name.clone(),
                lemma: "3.1".into(),
                t,
                ratio,
            }));
            out.rows.push(row(None, c));
        }
        Lemma::Duhamel => {
            let (g, name) = heat_grid(cfg, item)?;
            let times = heat_times(cfg, &g);
            let q = TimeConstant::new(g, &name);
            let opts = DuhamelOptions {
                steps: cfg.heat.duhamel_steps,
                ..DuhamelOptions::default()
            };
            let t_max = times.iter().copied().fold(0.0, f64::max);
            out.rows.push(row(None, duhamel_sup_check(&q, 0.0, t_max, &opts)?));
            let (c, series) = duhamel_gradient_bound_check(&q, 0.0, &times, &opts)?;
            out.series.extend(series.into_iter().map(|(t, ratio)| SeriesPoint {
                field: name.clone(),
                lemma: "3.2".into(),
                t,
                ratio,
            }));
            out.rows.push(row(None, c));
        }
        Lemma::Theorem => theorem_item(cfg, item, &mut out)?,
        _ => unreachable!(),
    }
    Ok(out)
}

fn theorem_item(cfg: &RunConfig, item: usize, out: &mut ItemOutput) -> Result<(), CliError> {
    let grid = grid_field(cfg, item)?;
    let name = match grid.seed {
        Some(s) => format!("random(seed={s},k_max={})", cfg.field.k_max),
        None => cfg.field.name.clone(),
    };
    out.rows.push(Row {
        item,
        n: None,
        check: theorem11_check_grid(&grid, &name, true)?,
    });
    if cfg.field.name == "random" {
        return Ok(());
    }
    let field = make_standard_field(&cfg.field.name, &cfg.field.params)?;
    let Some((center, radius)) = field.support() else {
        return Ok(());
    };
    let reach = center.iter().map(|c| c.abs()).fold(0.0, f64::max) + radius;
    let lattice = Lattice::new([-reach; 3], [reach; 3], 24);
    let opts = DyadicOptions {
        n_min: cfg.quadrature.dyadic_n_min,
        n_max: cfg.quadrature.dyadic_n_max,
        volume: VolumeOrder {
            order: cfg.quadrature.volume_order,
            panels: cfg.quadrature.volume_panels,
        },
    };
    let (mut check, sum) = theorem11_check_blocks(&field, &lattice, &opts)?;
    let mut partial = 0.0;
    for (n, term) in &sum.terms {
        partial += term;
        out.partial_sums.push(PartialSum {
            field: name.clone(),
            n: *n,
            term: *term,
            partial,
        });
    }
    let spectral = grad_pressure_spectral(&grid)?;
    let origin = spectral.grad_p.interpolate(&[[0.0; 3]])[0][0];
    let block = check.lhs;
    let rel = if origin != 0.0 {
        (block - origin.abs()).abs() / origin.abs()
    } else {
        block
    };
    check = check
        .with_extra("spectral_abs_dp1", origin.abs())
        .with_extra("block_vs_spectral", rel);
    out.extras.insert("block_vs_spectral".into(), rel);
    out.rows.push(Row { item, n: None, check });
    Ok(())
}

/// Runs a whole campaign. Items run in parallel (on the current rayon
/// pool) and are reduced in item order.
pub fn run(lemma: Lemma, cfg: &RunConfig) -> Result<Campaign, CliError> {
    cfg.validate()?;
    let items = census_size(cfg, lemma);
    let outputs: Vec<ItemOutput> = (0..items)
        .into_par_iter()
        .map(|i| run_item(lemma, cfg, i))
        .collect::<Result<_, _>>()?;
    let mut rows = Vec::new();
    let mut series = Vec::new();
    let mut partial_sums = Vec::new();
    let mut extras: BTreeMap<String, f64> = BTreeMap::new();
    for o in outputs {
        rows.extend(o.rows);
        series.extend(o.series);
        partial_sums.extend(o.partial_sums);
        for (k, v) in o.extras {
            let e = extras.entry(k).or_insert(f64::NEG_INFINITY);
            *e = e.max(v);
        }
    }
    let mut summary = summarize(lemma, items, &rows);
    match lemma {
        Lemma::Theorem => {
            let refined = rows
                .iter()
                .filter(|r| r.check.region.starts_with("torus"))
                .filter_map(|r| r.check.extras.get("ratio_refined").copied())
                .fold(0.0f64, f64::max);
            let coarse = rows
                .iter()
                .filter(|r| r.check.region.starts_with("torus"))
                .map(|r| r.check.ratio)
                .fold(0.0f64, f64::max);
            summary.extras.insert("beta_hat".into(), coarse);
            summary.extras.insert("beta_hat_refined".into(), refined);
            summary.extras.insert(
                "beta_hat_drift".into(),
                if coarse > 0.0 {
                    (refined - coarse).abs() / coarse
                } else {
                    0.0
                },
            );
        }
        Lemma::Duhamel => {
            let sup = rows
                .iter()
                .filter(|r| r.check.lemma == "3.2i")
                .map(|r| r.check.ratio)
                .fold(0.0f64, f64::max);
            summary.extras.insert("sup_ratio_max".into(), sup);
        }
        _ => {}
    }
    summary.extras.extend(extras);
    Ok(Campaign {
        rows,
        series,
        partial_sums,
        summary,
    })
}

/// Plain module-schema CSV of the checks (without the `n` column).
pub fn checks_csv(rows: &[Row]) -> String {
    let mut s = format!("{CSV_HEADER}\n");
    for r in rows {
        s.push_str(&r.check.csv_row());
        s.push('\n');
    }
    s
}
