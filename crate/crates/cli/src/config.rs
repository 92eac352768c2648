//! INI scenario files.
//!
//! ```ini
//! [scenario]
//! id = getoor
//!
//! [domain]
//! shape = interval -1 1     ; or: ball [cx [cy]] r, rect x0 y0 x1 y1
//! half_width = 2            ; grid box is [-half_width, half_width]^N
//!
//! [operator]
//! s = 0.5
//!
//! [grid]
//! levels = 10               ; h = 2^-level; probes need at least three
//!
//! [source]
//! value = 1                 ; or: file = f.csv (index,x[,y],value)
//!
//! [eigen]
//! count = 1
//!
//! [probe]
//! p = 2
//! sigma = 0.1:1.9:0.1       ; start:stop:step or a comma list
//! global = true
//! potential = false
//! subject = solution        ; solution, eigenfunction or cusp <beta>
//!
//! [cutoff.interior]
//! inner = interval -0.5 0.5
//! outer = interval -0.8 0.8
//! moll = 0.2
//!
//! [expect]
//! tolerance = 0.1
//! global = 1.0              ; expected threshold, or none
//! interior = none
//! ```

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use fraclap_core::Shape;
use ini::Ini;

use crate::CliError;

/// Normalized `section -> key -> value` record of a config.
pub type Record = BTreeMap<String, BTreeMap<String, String>>;

#[derive(Debug, Clone, PartialEq)]
pub enum Source {
    Constant(f64),
    File(PathBuf),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Subject {
    Solution,
    Eigenfunction,
    Cusp(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct CutoffSpec {
    pub id: String,
    pub inner: Shape,
    pub outer: Shape,
    pub moll: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProbeSpec {
    pub p: f64,
    pub sigma: Vec<f64>,
    pub global: bool,
    pub potential: bool,
    pub subject: Subject,
    pub cutoffs: Vec<CutoffSpec>,
    /// Expected threshold per localization id; `None` means no threshold
    /// below the ceiling.
    pub expect: BTreeMap<String, Option<f64>>,
    pub tolerance: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub id: String,
    pub dim: usize,
    pub shape: Shape,
    pub half_width: f64,
    pub s: f64,
    pub levels: Vec<u32>,
    pub source: Source,
    pub eigen_count: usize,
    pub probe: ProbeSpec,
    pub record: Record,
    /// Directory against which relative paths are resolved.
    pub base: PathBuf,
}

impl Config {
    /// Resolved parameter record written to the manifest.
    pub fn resolved(&self, verb: &str) -> serde_json::Value {
        let h: Vec<f64> = self.levels.iter().map(|&l| 2f64.powi(-(l as i32))).collect();
        let cutoffs: Vec<serde_json::Value> = self
            .probe
            .cutoffs
            .iter()
            .map(|c| serde_json::json!({ "id": c.id, "inner": c.inner, "outer": c.outer, "moll": c.moll }))
            .collect();
        let numerics = match verb {
            "probe" => serde_json::json!({
                "besov": "first and second differences, lattice-corrected diagonal, analytic far tail",
                "potential_pad": 4,
                "solver": "Cholesky or Jacobi-preconditioned CG on the singular-integral stencil",
            }),
            _ => serde_json::json!({
                "operator": "singular-integral stencil with lattice-corrected diagonal",
                "solver": "Cholesky or Jacobi-preconditioned CG, relative residual at most 1e-10",
            }),
        };
        serde_json::json!({
            "dim": self.dim,
            "s": self.s,
            "domain": self.shape,
            "half_width": self.half_width,
            "levels": self.levels,
            "h": h,
            "p": self.probe.p,
            "sigma": self.probe.sigma,
            "cutoffs": cutoffs,
            "numerics": numerics,
        })
    }
}

const KEYS: &[(&str, &[&str])] = &[
    ("scenario", &["id"]),
    ("domain", &["shape", "half_width"]),
    ("operator", &["s"]),
    ("grid", &["levels"]),
    ("source", &["value", "file"]),
    ("eigen", &["count"]),
    ("probe", &["p", "sigma", "global", "potential", "subject"]),
    ("expect", &[]),
];

const CUTOFF_KEYS: &[&str] = &["inner", "outer", "moll"];

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn number(section: &str, key: &str, v: &str) -> Result<f64, CliError> {
    v.trim()
        .parse::<f64>()
        .ok()
        .filter(|x| x.is_finite())
        .ok_or_else(|| usage(format!("[{section}] {key}: {v:?} is not a finite number")))
}

fn boolean(section: &str, key: &str, v: &str) -> Result<bool, CliError> {
    match v.trim() {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(usage(format!("[{section}] {key}: {v:?} is not a boolean"))),
    }
}

/// `interval a b`, `ball [cx [cy]] r` or `rect x0 y0 x1 y1`.
pub fn parse_shape(text: &str, dim: usize) -> Result<Shape, CliError> {
    let mut words = text.split_whitespace();
    let kind = words.next().ok_or_else(|| usage("empty shape"))?;
    let nums: Vec<f64> = words
        .map(|w| w.parse::<f64>().map_err(|_| usage(format!("shape {text:?}: {w:?} is not a number"))))
        .collect::<Result<_, _>>()?;
    let shape = match (kind, nums.len(), dim) {
        ("interval", 2, 1) => Shape::interval(nums[0], nums[1]),
        ("ball", n, d) if n == d + 1 => Shape::ball(&nums[..d], nums[d]),
        ("ball", 1, d) => Shape::ball(&vec![0.0; d], nums[0]),
        ("rect", 4, 2) => Shape::rect([nums[0], nums[1]], [nums[2], nums[3]]),
        _ => return Err(usage(format!("shape {text:?} is not valid in {dim} dimension(s)"))),
    };
    Ok(shape)
}

fn parse_sigma(text: &str) -> Result<Vec<f64>, CliError> {
    let parts: Vec<&str> = text.split(':').collect();
    let out = if parts.len() == 3 {
        let a = number("probe", "sigma", parts[0])?;
        let b = number("probe", "sigma", parts[1])?;
        let step = number("probe", "sigma", parts[2])?;
        if !(step > 0.0) || b < a {
            return Err(usage(format!("[probe] sigma: {text:?} is not an increasing range")));
        }
        let n = ((b - a) / step + 1e-9).floor() as usize;
        // round to the step's decimal grid so 0.1:1.9:0.1 yields 1.9 exactly
        (0..=n).map(|k| ((a + k as f64 * step) * 1e9).round() / 1e9).collect()
    } else {
        text.split(',').map(|w| number("probe", "sigma", w)).collect::<Result<Vec<_>, _>>()?
    };
    if out.is_empty() {
        return Err(usage("[probe] sigma is empty"));
    }
    Ok(out)
}

fn parse_levels(text: &str) -> Result<Vec<u32>, CliError> {
    let levels: Vec<u32> = text
        .split(',')
        .map(|w| w.trim().parse::<u32>().map_err(|_| usage(format!("[grid] levels: {w:?} is not a level"))))
        .collect::<Result<_, _>>()?;
    if levels.is_empty() || levels.iter().any(|&l| !(2..=14).contains(&l)) {
        return Err(usage(format!("[grid] levels {text:?} must lie in 2..=14")));
    }
    if levels.windows(2).any(|w| w[0] >= w[1]) {
        return Err(usage("[grid] levels must increase"));
    }
    Ok(levels)
}

fn to_record(ini: &Ini) -> Result<Record, CliError> {
    let mut record = Record::new();
    for (section, props) in ini.iter() {
        let Some(name) = section else {
            if props.iter().next().is_some() {
                return Err(usage("keys outside any section"));
            }
            continue;
        };
        let allowed: Option<&[&str]> = if name.starts_with("cutoff.") {
            Some(CUTOFF_KEYS)
        } else {
            KEYS.iter().find(|(s, _)| *s == name).map(|(_, k)| *k)
        };
        let Some(allowed) = allowed else {
            return Err(usage(format!("unknown section [{name}]")));
        };
        let entry = record.entry(name.to_string()).or_default();
        for (k, v) in props.iter() {
            if name != "expect" && !allowed.contains(&k) {
                return Err(usage(format!("unknown key {k:?} in [{name}]")));
            }
            if entry.insert(k.to_string(), v.trim().to_string()).is_some() {
                return Err(usage(format!("duplicate key {k:?} in [{name}]")));
            }
        }
    }
    Ok(record)
}

impl Config {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Io(format!("cannot read config {}: {e}", path.display())))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::parse(&text, &base)
    }

    pub fn parse(text: &str, base: &Path) -> Result<Self, CliError> {
        let ini = Ini::load_from_str(text).map_err(|e| usage(format!("config syntax: {e}")))?;
        let record = to_record(&ini)?;
        let get = |s: &str, k: &str| record.get(s).and_then(|m| m.get(k)).map(String::as_str);

        let id = get("scenario", "id").unwrap_or("run").to_string();
        if id.is_empty() || !id.chars().all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_') {
            return Err(usage(format!("[scenario] id {id:?} must be alphanumeric, '-' or '_'")));
        }
        let shape_text = get("domain", "shape").ok_or_else(|| usage("[domain] shape is required"))?;
        let dim = match shape_text.split_whitespace().next() {
            Some("rect") => 2,
            Some("ball") if shape_text.split_whitespace().count() == 4 => 2,
            _ => 1,
        };
        let shape = parse_shape(shape_text, dim)?;
        let half_width = get("domain", "half_width").map(|v| number("domain", "half_width", v)).transpose()?.unwrap_or(2.0);
        let s = number("operator", "s", get("operator", "s").ok_or_else(|| usage("[operator] s is required"))?)?;
        if !(s > 0.0 && s < 1.0) {
            return Err(usage(format!("[operator] s = {s} must lie in (0, 1)")));
        }
        let levels = parse_levels(get("grid", "levels").ok_or_else(|| usage("[grid] levels is required"))?)?;
        let source = match (get("source", "value"), get("source", "file")) {
            (Some(_), Some(_)) => return Err(usage("[source] takes either value or file")),
            (Some(v), None) => Source::Constant(number("source", "value", v)?),
            (None, Some(f)) => Source::File(base.join(f)),
            (None, None) => Source::Constant(1.0),
        };
        let eigen_count = match get("eigen", "count") {
            Some(v) => v.parse::<usize>().ok().filter(|&k| k > 0).ok_or_else(|| usage("[eigen] count must be positive"))?,
            None => 1,
        };

        let p = get("probe", "p").map(|v| number("probe", "p", v)).transpose()?.unwrap_or(2.0);
        let sigma = parse_sigma(get("probe", "sigma").unwrap_or("0.1:1.9:0.1"))?;
        let global = get("probe", "global").map(|v| boolean("probe", "global", v)).transpose()?.unwrap_or(true);
        let potential =
            get("probe", "potential").map(|v| boolean("probe", "potential", v)).transpose()?.unwrap_or(false);
        let subject = match get("probe", "subject").unwrap_or("solution").split_whitespace().collect::<Vec<_>>()[..] {
            ["solution"] => Subject::Solution,
            ["eigenfunction"] => Subject::Eigenfunction,
            ["cusp", b] => Subject::Cusp(number("probe", "subject", b)?),
            _ => return Err(usage("[probe] subject must be solution, eigenfunction or cusp <beta>")),
        };
        let mut cutoffs = Vec::new();
        for (name, keys) in record.iter().filter(|(n, _)| n.starts_with("cutoff.")) {
            let id = name["cutoff.".len()..].to_string();
            if id.is_empty() || id == "global" {
                return Err(usage(format!("[{name}] needs a name other than global")));
            }
            let need = |k: &str| keys.get(k).ok_or_else(|| usage(format!("[{name}] {k} is required")));
            cutoffs.push(CutoffSpec {
                id,
                inner: parse_shape(need("inner")?, dim)?,
                outer: parse_shape(need("outer")?, dim)?,
                moll: number(name, "moll", need("moll")?)?,
            });
        }
        let mut known: BTreeSet<&str> = cutoffs.iter().map(|c| c.id.as_str()).collect();
        if global {
            known.insert("global");
        }
        let mut expect = BTreeMap::new();
        let mut tolerance = 0.1;
        if let Some(keys) = record.get("expect") {
            for (k, v) in keys {
                if k == "tolerance" {
                    tolerance = number("expect", k, v)?;
                } else if !known.contains(k.as_str()) {
                    return Err(usage(format!("[expect] {k} names no probed localization")));
                } else if v == "none" {
                    expect.insert(k.clone(), None);
                } else {
                    expect.insert(k.clone(), Some(number("expect", k, v)?));
                }
            }
        }
        Ok(Config {
            id,
            dim,
            shape,
            half_width,
            s,
            levels,
            source,
            eigen_count,
            probe: ProbeSpec { p, sigma, global, potential, subject, cutoffs, expect, tolerance },
            record,
            base: base.to_path_buf(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const GETOOR: &str = "[scenario]\nid = getoor\n[domain]\nshape = interval -1 1\n[operator]\ns = 0.5\n[grid]\nlevels = 10\n";

    #[test]
    fn minimal_config() {
        let c = Config::parse(GETOOR, Path::new("")).unwrap();
        assert_eq!(c.levels, vec![10]);
        assert_eq!(c.source, Source::Constant(1.0));
        assert_eq!(c.shape, Shape::interval(-1.0, 1.0));
        assert_eq!(c.probe.sigma.len(), 19);
        assert_eq!(*c.probe.sigma.last().unwrap(), 1.9);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        for extra in ["[operator]\norder = 2\n", "[mystery]\na = 1\n", "[expect]\nfoo = 1\n", "[cutoff.a]\nwidth = 1\n"] {
            let text = format!("{GETOOR}{extra}");
            assert!(matches!(Config::parse(&text, Path::new("")), Err(CliError::Usage(_))), "{extra}");
        }
    }

    #[test]
    fn shapes_and_ranges() {
        assert_eq!(parse_shape("ball 0 0 1", 2).unwrap(), Shape::ball(&[0.0, 0.0], 1.0));
        assert_eq!(parse_shape("ball 1", 1).unwrap(), Shape::ball(&[0.0], 1.0));
        assert!(parse_shape("rect 0 0 1", 2).is_err());
        assert_eq!(parse_sigma("0.5,1.5").unwrap(), vec![0.5, 1.5]);
        assert!(parse_sigma("1:0:0.1").is_err());
        assert!(parse_levels("9,8").is_err());
    }
}
