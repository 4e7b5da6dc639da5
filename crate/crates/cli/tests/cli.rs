use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn pprobe(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pprobe"))
        .current_dir(dir)
        .env("PPROBE_THREADS", "1")
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn gen_is_reproducible_for_a_seed() {
    let d = tempfile::tempdir().unwrap();
    let a = pprobe(d.path(), &["--seed", "7", "--out", "a", "gen"]);
    let b = pprobe(d.path(), &["--seed", "7", "--out", "b", "gen"]);
    let c = pprobe(d.path(), &["--seed", "8", "--out", "c", "gen"]);
    assert!(a.status.success());
    assert_eq!(stdout(&a), stdout(&b));
    assert_ne!(stdout(&a), stdout(&c));
    assert_eq!(
        fs::read(d.path().join("a/field.dff1")).unwrap(),
        fs::read(d.path().join("b/field.dff1")).unwrap()
    );
}

#[test]
fn gen_with_no_modes_writes_zeros() {
    let d = tempfile::tempdir().unwrap();
    fs::write(d.path().join("z.toml"), "[field]\nk_max = 0\n[grid]\nn = 8\n").unwrap();
    let o = pprobe(d.path(), &["--config", "z.toml", "--format", "json", "gen"]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["sup_norm"], 0.0);
}

#[test]
fn unknown_lemma_is_a_usage_error() {
    let d = tempfile::tempdir().unwrap();
    let o = pprobe(d.path(), &["verify", "9.9"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("unknown lemma"));
}

#[test]
fn bad_grid_size_is_a_config_error() {
    let d = tempfile::tempdir().unwrap();
    let o = pprobe(d.path(), &["--grid-n", "24", "gen"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn constant_field_has_zero_rectangle_ratios() {
    let d = tempfile::tempdir().unwrap();
    fs::write(
        d.path().join("c.toml"),
        "[field]\nname = \"constant\"\nparams = [1.0, 2.0, 3.0]\nproject = false\n[census]\ncount = 2\n",
    )
    .unwrap();
    let o = pprobe(d.path(), &["--config", "c.toml", "verify", "2.1"]);
    assert!(o.status.success());
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "lemma,field,region,lhs,rhs_factor,ratio,stable,n"
    );
    let mut rows = 0;
    let mut rdr = csv::Reader::from_reader(text.as_bytes());
    for r in rdr.records() {
        let r = r.unwrap();
        assert_eq!(r[5].parse::<f64>().unwrap(), 0.0);
        rows += 1;
    }
    assert!(rows > 0);
    assert!(d.path().join("out/verify_2.1.json").exists());
}

#[test]
fn zero_final_time_gives_one_trajectory_row() {
    let d = tempfile::tempdir().unwrap();
    fs::write(d.path().join("s.toml"), "[grid]\nn = 8\n[sim]\nt_final = 0.0\n").unwrap();
    let o = pprobe(d.path(), &["--config", "s.toml", "simulate"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let traj = fs::read_to_string(d.path().join("out/trajectory.csv")).unwrap();
    assert_eq!(traj.lines().count(), 2);
    assert!(traj.starts_with("t,sup_u,"));
}

#[test]
fn abc_pressure_at_origin() {
    let d = tempfile::tempdir().unwrap();
    fs::write(
        d.path().join("p.toml"),
        "[field]\nname = \"abc\"\nparams = [1.0, 1.0, 1.0]\nproject = false\n[grid]\nn = 32\n",
    )
    .unwrap();
    let o = pprobe(d.path(), &["--config", "p.toml", "pressure"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(d.path().join("out/pressure.json")).unwrap()).unwrap();
    let report = &v["reports"][0];
    assert_eq!(report["method"], "spectral");
    for c in report["grad_p"][0].as_array().unwrap() {
        assert!((c.as_f64().unwrap() + 1.0).abs() < 1e-12);
    }
}

#[test]
fn coulomb_on_periodic_field_needs_acknowledgement() {
    let d = tempfile::tempdir().unwrap();
    fs::write(
        d.path().join("p.toml"),
        "[field]\nname = \"abc\"\nproject = false\n[pressure]\nmethods = [\"coulomb\"]\n",
    )
    .unwrap();
    let o = pprobe(d.path(), &["--config", "p.toml", "pressure"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("truncation"));
}

#[test]
fn report_without_inputs_fails() {
    let d = tempfile::tempdir().unwrap();
    let o = pprobe(d.path(), &["report"]);
    assert!(!o.status.success());
}

#[test]
fn report_turns_a_census_into_plot_data() {
    let d = tempfile::tempdir().unwrap();
    fs::write(
        d.path().join("c.toml"),
        "[census]\ncount = 2\n[region]\nn_min = 0\nn_max = 1\n",
    )
    .unwrap();
    assert!(pprobe(d.path(), &["--config", "c.toml", "verify", "2.1"])
        .status
        .success());
    let o = pprobe(d.path(), &["--out", "plots", "report", "out/verify_2.1.csv"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let table = fs::read_to_string(d.path().join("plots/max_ratio.csv")).unwrap();
    assert!(table.starts_with("lemma,max_ratio,checks\n2.1,"));
    assert!(d.path().join("plots/ratio_vs_n_2.1.dat").exists());
}
