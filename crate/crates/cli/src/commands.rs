//! The five subcommands. Each writes its files under `output.out` and
//! returns the text for stdout together with the exit-code verdict.

use std::fs;
use std::path::{Path, PathBuf};

use pprobe_core::fields::Lattice;
use pprobe_core::fields::{make_standard_field, VelocityField};
use pprobe_core::pressure::{
    grad_pressure_coulomb, grad_pressure_spectral, theorem11_check_blocks, CoulombOptions, DyadicOptions,
    PressureReport, VolumeOrder, NEWTON_FACTOR,
};
use pprobe_core::sim::{monitor, run as run_sim, MonitorReport};
use serde::Serialize;
use serde_json::json;
use sha2::{Digest, Sha256};

use crate::campaign::{self, grid_field, Lemma};
use crate::config::{Format, RunConfig};
use crate::report;
use crate::CliError;

/// Result of a command: what to print and whether the run passed.
#[derive(Clone, Debug, PartialEq)]
pub struct Outcome {
    pub stdout: String,
    pub passed: bool,
    pub files: Vec<PathBuf>,
}

fn out_dir(cfg: &RunConfig) -> Result<&Path, CliError> {
    let d = cfg.output.out.as_path();
    fs::create_dir_all(d)?;
    Ok(d)
}

fn write(files: &mut Vec<PathBuf>, path: PathBuf, bytes: impl AsRef<[u8]>) -> Result<(), CliError> {
    fs::write(&path, bytes)?;
    files.push(path);
    Ok(())
}

fn pretty(v: &impl Serialize) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serialisable");
    s.push('\n');
    s
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    format!("{:x}", Sha256::digest(bytes))
}

/// `gen`: writes `field.dff1` and reports its divergence residual.
pub fn gen(cfg: &RunConfig) -> Result<Outcome, CliError> {
    cfg.validate()?;
    let g = grid_field(cfg, 0)?;
    let dir = out_dir(cfg)?;
    let bytes = g.to_bytes();
    let hash = sha256_hex(&bytes);
    let mut files = Vec::new();
    write(&mut files, dir.join("field.dff1"), &bytes)?;
    let residual = g.relative_divergence();
    let summary = json!({
        "file": "field.dff1",
        "n": g.n(),
        "box_l": g.box_len(),
        "sup_norm": g.sup_norm(),
        "relative_divergence": residual,
        "sha256": hash,
    });
    let stdout = match cfg.output.format {
        Format::Json => pretty(&summary),
        Format::Csv => format!(
            "file,n,box_l,sup_norm,relative_divergence,sha256\nfield.dff1,{},{},{:e},{:e},{hash}\n",
            g.n(),
            g.box_len(),
            g.sup_norm(),
            residual
        ),
    };
    Ok(Outcome {
        stdout,
        passed: residual < cfg.tolerances.divergence,
        files,
    })
}

/// `verify <lemma>`: one CSV row per check and a JSON summary.
pub fn verify(lemma: Lemma, cfg: &RunConfig) -> Result<Outcome, CliError> {
    let camp = campaign::run(lemma, cfg)?;
    let dir = out_dir(cfg)?;
    let id = lemma.id();
    let mut files = Vec::new();
    write(&mut files, dir.join(format!("verify_{id}.csv")), camp.csv())?;
    if !camp.series.is_empty() {
        write(&mut files, dir.join(format!("series_{id}.csv")), camp.series_csv())?;
    }
    if !camp.partial_sums.is_empty() {
        write(
            &mut files,
            dir.join(format!("partial_sums_{id}.csv")),
            camp.partial_sums_csv(),
        )?;
    }
    let summary = json!({
        "config_hash": cfg.hash(),
        "summary": camp.summary,
        "passed": camp.passed(),
    });
    write(&mut files, dir.join(format!("verify_{id}.json")), pretty(&summary))?;
    let stdout = match cfg.output.format {
        Format::Csv => camp.csv(),
        Format::Json => pretty(&summary),
    };
    Ok(Outcome {
        stdout,
        passed: camp.passed(),
        files,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PressureComparison {
    pub a: String,
    pub b: String,
    /// `max |∇P_a − ∇P_b|` (componentwise) over the points.
    pub max_abs: f64,
    /// `max_abs` relative to the largest component of `∇P_b`.
    pub relative: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PressureSummary {
    pub reports: Vec<PressureReport>,
    pub comparisons: Vec<PressureComparison>,
}

/// `pressure`: ∇P by each requested route at the configured points.
pub fn pressure(cfg: &RunConfig) -> Result<Outcome, CliError> {
    cfg.validate()?;
    let pc = &cfg.pressure;
    if pc.methods.is_empty() || pc.points.is_empty() {
        return Err(CliError::Config("pressure needs methods and points".into()));
    }
    let mut reports = Vec::new();
    for m in &pc.methods {
        reports.push(match m.as_str() {
            "spectral" => spectral_report(cfg)?,
            "coulomb" => coulomb_report(cfg)?,
            "blocks" => blocks_report(cfg)?,
            other => return Err(CliError::Config(format!("unknown pressure method `{other}`"))),
        });
    }
    let mut comparisons = Vec::new();
    for i in 0..reports.len() {
        for j in i + 1..reports.len() {
            comparisons.push(compare(&reports[j], &reports[i]));
        }
    }
    let summary = PressureSummary { reports, comparisons };
    let dir = out_dir(cfg)?;
    let mut files = Vec::new();
    let text = pretty(&summary);
    write(&mut files, dir.join("pressure.json"), &text)?;
    let stdout = match cfg.output.format {
        Format::Json => text,
        Format::Csv => {
            let mut s = String::from("method,x1,x2,x3,dP1,dP2,dP3\n");
            for r in &summary.reports {
                for (p, g) in r.points.iter().zip(&r.grad_p) {
                    s.push_str(&format!(
                        "{},{},{},{},{:e},{:e},{:e}\n",
                        r.method, p[0], p[1], p[2], g[0], g[1], g[2]
                    ));
                }
            }
            s
        }
    };
    Ok(Outcome {
        stdout,
        passed: true,
        files,
    })
}

fn compare(a: &PressureReport, b: &PressureReport) -> PressureComparison {
    // the block route only reports ∂₁P at the origin
    let comps = if a.method == "blocks" || b.method == "blocks" {
        1
    } else {
        3
    };
    let mut max_abs = 0.0f64;
    let mut scale = 0.0f64;
    for (pa, (ga, gb)) in a.points.iter().zip(a.grad_p.iter().zip(&b.grad_p)) {
        if b.points.iter().all(|q| q != pa) {
            continue;
        }
        for c in 0..comps {
            max_abs = max_abs.max((ga[c] - gb[c]).abs());
            scale = scale.max(gb[c].abs());
        }
    }
    PressureComparison {
        a: a.method.clone(),
        b: b.method.clone(),
        max_abs,
        relative: if scale > 0.0 { max_abs / scale } else { max_abs },
    }
}

fn named_field(cfg: &RunConfig) -> Result<pprobe_core::fields::StandardField<f64>, CliError> {
    if cfg.field.name == "random" || cfg.field.name == "step" {
        return Err(CliError::Config(format!(
            "pressure routes need a closed-form field, got `{}`",
            cfg.field.name
        )));
    }
    Ok(make_standard_field(&cfg.field.name, &cfg.field.params)?)
}

fn spectral_report(cfg: &RunConfig) -> Result<PressureReport, CliError> {
    let grid = grid_field(cfg, 0)?;
    let p = grad_pressure_spectral(&grid)?;
    let points = cfg.pressure.points.clone();
    Ok(PressureReport {
        method: "spectral".into(),
        field: cfg.field.name.clone(),
        grad_p: p.grad_p.interpolate(&points),
        points,
        normalization: 1.0,
        r_excl: None,
        r_outer: None,
        n_range: None,
        error_estimate: p.residual,
    })
}

fn coulomb_report(cfg: &RunConfig) -> Result<PressureReport, CliError> {
    let field = named_field(cfg)?;
    let pc = &cfg.pressure;
    if field.support().is_none() && !(pc.acknowledge_truncation && pc.r_outer.is_some()) {
        return Err(CliError::Core(pprobe_core::Error::Truncated));
    }
    let opts = CoulombOptions {
        r_excl: pc.r_excl,
        r_outer: pc.r_outer,
        ..CoulombOptions::default()
    };
    let mut grad_p = Vec::new();
    let mut err = 0.0f64;
    for p in &pc.points {
        let e = grad_pressure_coulomb(&field, *p, &opts)?;
        err = err.max(e.exclusion_error + e.quadrature_error);
        grad_p.push(e.grad_p);
    }
    Ok(PressureReport {
        method: "coulomb".into(),
        field: field.descriptor(),
        points: pc.points.clone(),
        grad_p,
        normalization: NEWTON_FACTOR,
        r_excl: Some(pc.r_excl),
        r_outer: pc.r_outer,
        n_range: None,
        error_estimate: err * NEWTON_FACTOR,
    })
}

fn blocks_report(cfg: &RunConfig) -> Result<PressureReport, CliError> {
    let field = named_field(cfg)?;
    let Some((c, r)) = field.support() else {
        return Err(CliError::Core(pprobe_core::Error::Truncated));
    };
    let q = &cfg.quadrature;
    let opts = DyadicOptions {
        n_min: q.dyadic_n_min,
        n_max: q.dyadic_n_max,
        volume: VolumeOrder {
            order: q.volume_order,
            panels: q.volume_panels,
        },
    };
    let reach = c.iter().map(|v| v.abs()).fold(0.0, f64::max) + r;
    let (check, sum) = theorem11_check_blocks(&field, &Lattice::new([-reach; 3], [reach; 3], 16), &opts)?;
    Ok(PressureReport {
        method: "blocks".into(),
        field: field.descriptor(),
        points: vec![[0.0; 3]],
        grad_p: vec![[sum.total * NEWTON_FACTOR, f64::NAN, f64::NAN]],
        normalization: NEWTON_FACTOR,
        r_excl: None,
        r_outer: None,
        n_range: Some((q.dyadic_n_min, q.dyadic_n_max)),
        error_estimate: check.extras.get("tail_estimate").copied().unwrap_or(0.0),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SimulationSummary {
    pub config_hash: String,
    pub steps: usize,
    pub dt: f64,
    pub monitor: MonitorReport,
    pub sup_growth_bound: f64,
    pub divergence_ok: bool,
    pub passed: bool,
}

/// `simulate`: trajectory CSV, summary JSON and checkpoints.
pub fn simulate(cfg: &RunConfig) -> Result<Outcome, CliError> {
    cfg.validate()?;
    let u0 = grid_field(cfg, 0)?;
    let traj = run_sim(&u0, &cfg.sim)?;
    let rep = monitor(&traj)?;
    let hash = cfg.hash();
    let dir = out_dir(cfg)?;
    let mut files = Vec::new();
    let csv = traj.csv();
    write(&mut files, dir.join("trajectory.csv"), &csv)?;
    for (i, s) in traj.checkpoints.iter().enumerate() {
        let stem = format!("checkpoint_{i:05}");
        write(&mut files, dir.join(format!("{stem}.dff1")), s.u.to_bytes())?;
        let side = json!({ "t": s.t, "nu": s.nu, "config_hash": hash });
        write(&mut files, dir.join(format!("{stem}.json")), pretty(&side))?;
    }
    let divergence_ok = traj.max_relative_divergence < cfg.tolerances.sim_divergence;
    let passed = divergence_ok && rep.energy_monotone;
    let summary = SimulationSummary {
        config_hash: hash,
        steps: traj.steps,
        dt: traj.dt,
        monitor: rep,
        sup_growth_bound: pprobe_core::sim::SUP_GROWTH,
        divergence_ok,
        passed,
    };
    let text = pretty(&summary);
    write(&mut files, dir.join("summary.json"), &text)?;
    let stdout = match cfg.output.format {
        Format::Csv => csv,
        Format::Json => text,
    };
    Ok(Outcome { stdout, passed, files })
}

/// `report`: aggregates campaign and trajectory CSVs into plot data.
pub fn report(inputs: &[PathBuf], cfg: &RunConfig) -> Result<Outcome, CliError> {
    let dir = out_dir(cfg)?;
    let written = report::aggregate(inputs, dir)?;
    let stdout = written.iter().map(|p| format!("{}\n", p.display())).collect::<String>();
    Ok(Outcome {
        stdout,
        passed: true,
        files: written,
    })
}
