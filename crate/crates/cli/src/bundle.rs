//! Result bundle: JSON manifest and summary plus CSV series, staged and then
//! renamed into place.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use robust_xva::dual::Boundary;
use robust_xva::io::{fmt_num, write_profile, write_worst_case_bcva, write_worst_case_fva};
use robust_xva::metrics::integrated_pfe;
use serde::ser::{Serialize, SerializeMap, Serializer};
use serde_json::value::RawValue;

use crate::config::Config;
use crate::pipeline::{RunResult, WorstCase};
use crate::RunError;

pub const MANIFEST: &str = "manifest.json";
pub const SUMMARY: &str = "summary.json";
pub const ROBUST_CURVE: &str = "robust_curve.csv";
pub const WORST_CASE: &str = "worst_case.csv";

/// Reads a TOML config, or the `config` object of a manifest when the path
/// ends in `.json`.
pub fn load_config(path: &Path) -> Result<Config, RunError> {
    if path.extension().is_some_and(|e| e == "json") {
        let text = fs::read_to_string(path)
            .map_err(|e| RunError::Config(format!("{}: {e}", path.display())))?;
        let v: serde_json::Value = serde_json::from_str(&text)
            .map_err(|e| RunError::Config(format!("{}: {e}", path.display())))?;
        let cfg = v
            .get("config")
            .ok_or_else(|| RunError::Config("manifest has no `config` object".into()))?;
        let cfg: Config = serde_json::from_value(cfg.clone())
            .map_err(|e| RunError::Config(format!("manifest `config`: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    } else {
        Config::load(path)
    }
}

/// JSON number printed with [`fmt_num`]; non-finite values become `null`.
struct Num(f64);

impl Serialize for Num {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        if !self.0.is_finite() {
            return s.serialize_none();
        }
        RawValue::from_string(fmt_num(self.0))
            .map_err(serde::ser::Error::custom)?
            .serialize(s)
    }
}

/// Ordered JSON object.
#[derive(Default)]
struct Obj(Vec<(&'static str, Box<dyn ErasedSer>)>);

trait ErasedSer {
    fn json(&self) -> serde_json::Result<Box<RawValue>>;
}

impl<T: Serialize> ErasedSer for T {
    fn json(&self) -> serde_json::Result<Box<RawValue>> {
        serde_json::value::to_raw_value(self)
    }
}

impl Obj {
    fn put(mut self, k: &'static str, v: impl Serialize + 'static) -> Self {
        self.0.push((k, Box::new(v)));
        self
    }

    fn num(self, k: &'static str, v: f64) -> Self {
        self.put(k, Num(v))
    }
}

impl Serialize for Obj {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut m = s.serialize_map(Some(self.0.len()))?;
        for (k, v) in &self.0 {
            m.serialize_entry(k, &v.json().map_err(serde::ser::Error::custom)?)?;
        }
        m.end()
    }
}

fn nums(v: &[f64]) -> Vec<Num> {
    v.iter().map(|&x| Num(x)).collect()
}

fn boundary_str(b: Option<Boundary>) -> &'static str {
    match b {
        None => "interior",
        Some(Boundary::Upper) => "upper",
        Some(Boundary::Lower) => "lower",
    }
}

/// Baseline in the reporting convention of the mode (the δ = 0 robust value).
pub fn mode_baseline(r: &RunResult) -> f64 {
    r.baseline
}

/// Robust value at the largest radius.
pub fn worst_case_value(r: &RunResult) -> f64 {
    r.robust
        .iter()
        .filter(|p| p.delta == r.worst_case_delta)
        .map(|p| p.value)
        .next()
        .unwrap_or(f64::NAN)
}

/// Worst-case value over positive Max PFE (credit modes) or over integrated
/// funding-cost PFE (funding modes).
pub fn pfe_ratio(r: &RunResult) -> f64 {
    let denom = match &r.funding_profiles {
        Some(f) => integrated_pfe(&f.positive),
        None => r.profiles.positive.max_pfe,
    };
    worst_case_value(r) / denom
}

fn manifest(r: &RunResult) -> Result<Obj, RunError> {
    let cfg = serde_json::to_value(&r.config).map_err(|e| RunError::Config(e.to_string()))?;
    let robust: Vec<Obj> = r
        .robust
        .iter()
        .map(|p| {
            Obj::default()
                .num("percentage", p.percentage)
                .num("delta", p.delta)
                .num("alpha", p.alpha)
                .num("value", p.value)
                .put("boundary", boundary_str(p.boundary))
        })
        .collect();
    let hw = &r.hw;
    Ok(Obj::default()
        .put("mode", r.config.mode.as_str())
        .put("seed", r.config.seed)
        .put("second_seed", r.config.second_seed())
        .put("n_paths", r.config.n_paths)
        .put("n_dates", r.grid.n())
        .num("s3", r.s3)
        .put("s3_overridden", r.s3_overridden)
        .num("delta_l", r.bounds.delta_l)
        .num("delta_u", r.bounds.delta_u)
        .num("matching_cost", r.bounds.matching_cost)
        .put("matched", r.bounds.matched)
        .put(
            "hull_white",
            Obj::default()
                .num("mean_reversion", hw.params.mean_reversion())
                .put("vol_times", nums(hw.params.vol_times()))
                .put("vols", nums(hw.params.vols()))
                .num("rmse", hw.rmse)
                .num("relative_rmse", hw.relative_rmse),
        )
        .put("robust", robust)
        .put("config", cfg))
}

fn summary(r: &RunResult) -> Obj {
    let b = &r.baselines;
    let names = if r.config.mode.is_funding() {
        ["fca", "fba", "fva"]
    } else {
        ["cva", "dva", "bcva"]
    };
    let baselines = Obj::default()
        .num(names[0], b.cost)
        .num(names[1], b.benefit)
        .num(names[2], b.total);
    let side = |p: &robust_xva::metrics::ExposureProfile| {
        Obj::default()
            .num("epe", p.epe)
            .num("eff_epe", p.eff_epe)
            .num("max_pfe", p.max_pfe)
    };
    let mut o = Obj::default()
        .put("mode", r.config.mode.as_str())
        .put("baselines", baselines)
        .num("baseline", mode_baseline(r))
        .num("worst_case_delta", r.worst_case_delta)
        .num("worst_case_value", worst_case_value(r))
        .put("worst_case_exported", r.worst_case.is_some())
        .put("exposure_positive", side(&r.profiles.positive))
        .put("exposure_negative", side(&r.profiles.negative));
    if let Some(f) = &r.funding_profiles {
        o = o
            .put("funding_positive", side(&f.positive))
            .put("funding_negative", side(&f.negative))
            .num("integrated_funding_pfe", integrated_pfe(&f.positive))
            .num("worst_case_over_integrated_pfe", pfe_ratio(r));
    } else {
        o = o.num("worst_case_over_max_pfe", pfe_ratio(r));
    }
    o
}

pub fn summary_line(r: &RunResult) -> String {
    format!(
        "{}: baseline {} worst case {} at delta {} (delta_l {}, delta_u {}, S3 {})",
        r.config.mode.as_str(),
        fmt_num(mode_baseline(r)),
        fmt_num(worst_case_value(r)),
        fmt_num(r.worst_case_delta),
        fmt_num(r.bounds.delta_l),
        fmt_num(r.bounds.delta_u),
        fmt_num(r.s3)
    )
}

fn write_err(path: &Path, e: impl std::fmt::Display) -> RunError {
    RunError::Data(format!("cannot write {}: {e}", path.display()))
}

fn create(dir: &Path, name: &str) -> Result<(PathBuf, BufWriter<File>), RunError> {
    let p = dir.join(name);
    let f = File::create(&p).map_err(|e| write_err(&p, e))?;
    Ok((p, BufWriter::new(f)))
}

fn write_json(dir: &Path, name: &str, v: &Obj) -> Result<(), RunError> {
    let (p, mut w) = create(dir, name)?;
    serde_json::to_writer_pretty(&mut w, v).map_err(|e| write_err(&p, e))?;
    writeln!(w)
        .and_then(|_| w.flush())
        .map_err(|e| write_err(&p, e))
}

fn write_files(r: &RunResult, dir: &Path) -> Result<(), RunError> {
    write_json(dir, MANIFEST, &manifest(r)?)?;
    write_json(dir, SUMMARY, &summary(r))?;

    let (p, mut w) = create(dir, ROBUST_CURVE)?;
    let mut text = String::from("percentage,delta,alpha,value,boundary\n");
    for q in &r.robust {
        text.push_str(&format!(
            "{},{},{},{},{}\n",
            fmt_num(q.percentage),
            fmt_num(q.delta),
            fmt_num(q.alpha),
            fmt_num(q.value),
            boundary_str(q.boundary)
        ));
    }
    w.write_all(text.as_bytes())
        .and_then(|_| w.flush())
        .map_err(|e| write_err(&p, e))?;

    let mut profiles = vec![
        ("exposure_positive.csv", &r.profiles.positive),
        ("exposure_negative.csv", &r.profiles.negative),
    ];
    if let Some(f) = &r.funding_profiles {
        profiles.push(("funding_positive.csv", &f.positive));
        profiles.push(("funding_negative.csv", &f.negative));
    }
    for (name, prof) in profiles {
        let (p, mut w) = create(dir, name)?;
        write_profile(&mut w, prof).map_err(|e| write_err(&p, e))?;
        w.flush().map_err(|e| write_err(&p, e))?;
    }

    if let Some(wc) = &r.worst_case {
        let (p, mut w) = create(dir, WORST_CASE)?;
        match wc {
            WorstCase::Bcva(d) => write_worst_case_bcva(&mut w, d),
            WorstCase::Fva(d) => write_worst_case_fva(&mut w, d),
        }
        .map_err(|e| write_err(&p, e))?;
        w.flush().map_err(|e| write_err(&p, e))?;
    }
    Ok(())
}

/// Writes into a sibling staging directory and renames it onto `out`; an
/// existing `out` is replaced only after every file has been written.
pub fn write_bundle(r: &RunResult, out: &Path) -> Result<(), RunError> {
    let name = out
        .file_name()
        .ok_or_else(|| RunError::Config(format!("bad output path {}", out.display())))?;
    let parent = match out.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    fs::create_dir_all(&parent).map_err(|e| write_err(&parent, e))?;
    let tag = format!(".{}.{}", name.to_string_lossy(), std::process::id());
    let staging = parent.join(format!("{tag}.staging"));
    let _ = fs::remove_dir_all(&staging);
    fs::create_dir(&staging).map_err(|e| write_err(&staging, e))?;
    if let Err(e) = write_files(r, &staging) {
        let _ = fs::remove_dir_all(&staging);
        return Err(e);
    }
    let old = parent.join(format!("{tag}.old"));
    let had_old = out.exists();
    if had_old {
        fs::rename(out, &old).map_err(|e| write_err(out, e))?;
    }
    if let Err(e) = fs::rename(&staging, out) {
        if had_old {
            let _ = fs::rename(&old, out);
        }
        let _ = fs::remove_dir_all(&staging);
        return Err(write_err(out, e));
    }
    if had_old {
        let _ = fs::remove_dir_all(&old);
    }
    Ok(())
}
