//! `report`: turns campaign and trajectory CSVs into two-column plot data.
//!
//! Inputs are recognised by their header: campaign rows, `(t, ratio)`
//! series, dyadic partial sums, or simulation trajectories.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use pprobe_core::sim::TRAJECTORY_HEADER;

use crate::campaign::ROW_HEADER;
use crate::CliError;

const SERIES_HEADER: &str = "lemma,field,t,ratio";
const PARTIAL_HEADER: &str = "field,n,term,partial";

#[derive(Default)]
struct Tables {
    /// lemma → dyadic index (or `None`) → max ratio
    ratio_by_n: BTreeMap<String, BTreeMap<Option<i32>, f64>>,
    max_ratio: BTreeMap<String, (f64, usize)>,
    /// lemma → t bits → (t, max ratio)
    ratio_by_t: BTreeMap<String, BTreeMap<u64, (f64, f64)>>,
    partial: BTreeMap<String, BTreeMap<i32, f64>>,
    /// file stem → rows of (t, r1, r2, r3)
    trajectories: BTreeMap<String, Vec<[f64; 4]>>,
}

fn parse_f64(s: &str, path: &Path) -> Result<f64, CliError> {
    s.trim()
        .parse()
        .map_err(|_| CliError::Input(format!("{}: bad number `{s}`", path.display())))
}

fn fmax(a: f64, b: f64) -> f64 {
    if b.is_finite() {
        a.max(b)
    } else {
        a
    }
}

fn read(path: &Path, tables: &mut Tables) -> Result<(), CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    let header = text.lines().next().unwrap_or("").trim();
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    let records: Vec<csv::StringRecord> = rdr
        .records()
        .collect::<Result<_, _>>()
        .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    match header {
        ROW_HEADER => {
            for r in &records {
                let lemma = r[0].to_string();
                let ratio = parse_f64(&r[5], path)?;
                let n = if r[7].is_empty() {
                    None
                } else {
                    Some(
                        r[7].parse()
                            .map_err(|_| CliError::Input(format!("{}: bad index", path.display())))?,
                    )
                };
                let e = tables
                    .ratio_by_n
                    .entry(lemma.clone())
                    .or_default()
                    .entry(n)
                    .or_insert(0.0);
                *e = fmax(*e, ratio);
                let m = tables.max_ratio.entry(lemma).or_insert((0.0, 0));
                m.0 = fmax(m.0, ratio);
                m.1 += 1;
            }
        }
        SERIES_HEADER => {
            for r in &records {
                let t = parse_f64(&r[2], path)?;
                let ratio = parse_f64(&r[3], path)?;
                let e = tables
                    .ratio_by_t
                    .entry(r[0].to_string())
                    .or_default()
                    .entry(t.to_bits())
                    .or_insert((t, 0.0));
                e.1 = fmax(e.1, ratio);
            }
        }
        PARTIAL_HEADER => {
            for r in &records {
                let n: i32 = r[1]
                    .parse()
                    .map_err(|_| CliError::Input(format!("{}: bad index", path.display())))?;
                tables
                    .partial
                    .entry(r[0].to_string())
                    .or_default()
                    .insert(n, parse_f64(&r[3], path)?);
            }
        }
        TRAJECTORY_HEADER => {
            let stem = path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "trajectory".into());
            let mut rows = Vec::new();
            for r in &records {
                rows.push([
                    parse_f64(&r[0], path)?,
                    parse_f64(&r[5], path)?,
                    parse_f64(&r[6], path)?,
                    parse_f64(&r[7], path)?,
                ]);
            }
            let mut key = stem.clone();
            let mut k = 1;
            while tables.trajectories.contains_key(&key) {
                k += 1;
                key = format!("{stem}{k}");
            }
            tables.trajectories.insert(key, rows);
        }
        other => {
            return Err(CliError::Input(format!(
                "{}: unrecognised header `{other}`",
                path.display()
            )))
        }
    }
    Ok(())
}

/// Reads every input and writes the plot-data files into `out`, returning
/// their paths in a fixed order.
pub fn aggregate(inputs: &[PathBuf], out: &Path) -> Result<Vec<PathBuf>, CliError> {
    if inputs.is_empty() {
        return Err(CliError::Input("report needs at least one input file".into()));
    }
    let mut tables = Tables::default();
    for p in inputs {
        read(p, &mut tables)?;
    }
    fs::create_dir_all(out)?;
    let mut written = Vec::new();
    let mut emit = |name: String, body: String| -> Result<(), CliError> {
        let path = out.join(name);
        fs::write(&path, body)?;
        written.push(path);
        Ok(())
    };
    for (lemma, by_n) in &tables.ratio_by_n {
        let mut s = String::from("# n ratio_max\n");
        for (i, (n, r)) in by_n.iter().enumerate() {
            let x = n.map(|v| v.to_string()).unwrap_or_else(|| i.to_string());
            s.push_str(&format!("{x} {r:e}\n"));
        }
        emit(format!("ratio_vs_n_{lemma}.dat"), s)?;
    }
    if !tables.max_ratio.is_empty() {
        let mut s = String::from("lemma,max_ratio,checks\n");
        for (lemma, (r, c)) in &tables.max_ratio {
            s.push_str(&format!("{lemma},{r:e},{c}\n"));
        }
        emit("max_ratio.csv".into(), s)?;
    }
    for (lemma, by_t) in &tables.ratio_by_t {
        let mut pts: Vec<(f64, f64)> = by_t.values().copied().collect();
        pts.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut s = String::from("# t ratio_max\n");
        for (t, r) in pts {
            s.push_str(&format!("{t:e} {r:e}\n"));
        }
        emit(format!("ratio_vs_t_{lemma}.dat"), s)?;
    }
    if !tables.partial.is_empty() {
        let mut s = String::from("# n partial_sum\n");
        for (field, by_n) in &tables.partial {
            s.push_str(&format!("# {field}\n"));
            for (n, v) in by_n {
                s.push_str(&format!("{n} {v:e}\n"));
            }
            s.push('\n');
        }
        emit("partial_sums_vs_n.dat".into(), s)?;
    }
    for (stem, rows) in &tables.trajectories {
        for (k, name) in ["r1", "r2", "r3"].iter().enumerate() {
            let mut s = format!("# t {name}\n");
            for r in rows {
                s.push_str(&format!("{:e} {:e}\n", r[0], r[k + 1]));
            }
            emit(format!("{stem}_{name}_vs_t.dat"), s)?;
        }
    }
    Ok(written)
}
