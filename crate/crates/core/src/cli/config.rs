//! Flat experiment configuration.
//!
//! ```text
//! # comment
//! [model]
//! name = burgers
//!
//! [grid]
//! cells = 256
//!
//! [scheme]
//! t_end = 2.0
//! ```
//!
//! Sections: `model`, `grid`, `initial`, `scheme`, `condition`, `output`.
//! Lists are comma separated. Only whole-line comments (`#` or `;`) are allowed.
//! An inline model gives ascending polynomial coefficients, e.g. `A11 = 0,0,1`
//! for A₁₁(u) = u²; only the upper triangle of A can be written.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};
use std::path::PathBuf;
use std::str::FromStr;

use thiserror::Error;

use crate::kinetic::{default_lambdas, LatticeSpec, SamplingPlan};
use crate::model::{presets, ModelError, ModelSpec, Polynomial, PolynomialModel};
use crate::solver::{Integrator, PeriodicGrid, SchemeConfig, SolverError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub struct ConfigIssue {
    /// 1-based line, `None` for problems with the file as a whole.
    pub line: Option<usize>,
    pub message: String,
}

impl fmt::Display for ConfigIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(l) => write!(f, "line {l}: {}", self.message),
            None => f.write_str(&self.message),
        }
    }
}

/// Every problem found in a configuration file.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub struct ConfigError {
    pub issues: Vec<ConfigIssue>,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, issue) in self.issues.iter().enumerate() {
            if k > 0 {
                f.write_char('\n')?;
            }
            write!(f, "{issue}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ModelChoice {
    Preset(String),
    Inline(InlineModel),
}

/// Coefficient lists, ascending powers of u.
#[derive(Debug, Clone, PartialEq)]
pub struct InlineModel {
    pub name: String,
    pub dimension: usize,
    pub flux: Vec<Vec<f64>>,
    /// `A11` in 1D; `A11, A12, A22` in 2D.
    pub diffusion_upper: Vec<Vec<f64>>,
}

impl InlineModel {
    pub fn polynomial(&self) -> PolynomialModel {
        PolynomialModel {
            dimension: self.dimension,
            flux: self.flux.iter().cloned().map(Polynomial::new).collect(),
            diffusion_upper: self
                .diffusion_upper
                .iter()
                .cloned()
                .map(Polynomial::new)
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelSection {
    pub choice: ModelChoice,
    /// M; the model default (1) when absent.
    pub state_bound: Option<f64>,
    pub tol_psd: Option<f64>,
    pub tol_factor: Option<f64>,
}

impl ModelSection {
    pub fn preset(name: &str) -> Self {
        Self {
            choice: ModelChoice::Preset(name.to_string()),
            state_bound: None,
            tol_psd: None,
            tol_factor: None,
        }
    }

    pub fn dimension(&self) -> Option<usize> {
        match &self.choice {
            ModelChoice::Preset(name) => presets::by_name(name).map(|m| m.dimension()),
            ModelChoice::Inline(m) => Some(m.dimension),
        }
    }

    pub fn build(&self) -> Result<ModelSpec, ModelError> {
        let mut model = match &self.choice {
            ModelChoice::Preset(name) => presets::by_name(name)
                .ok_or_else(|| ModelError::Invalid(format!("unknown preset `{name}`")))?,
            ModelChoice::Inline(m) => m.polynomial().build(&m.name, self.state_bound.unwrap_or(1.0))?,
        };
        if let Some(m) = self.state_bound {
            model = model.with_state_bound(m)?;
        }
        if self.tol_psd.is_some() || self.tol_factor.is_some() {
            let mut tol = model.tolerances();
            tol.psd = self.tol_psd.unwrap_or(tol.psd);
            tol.factor = self.tol_factor.unwrap_or(tol.factor);
            model = model.with_tolerances(tol);
        }
        Ok(model)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridSection {
    pub periods: Vec<f64>,
    pub cells: Vec<usize>,
}

impl GridSection {
    pub fn build(&self) -> Result<PeriodicGrid, SolverError> {
        PeriodicGrid::new(&self.periods, &self.cells)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProfileKind {
    Sine,
    MultiSine,
    SquareWave,
    Random,
}

impl ProfileKind {
    pub const NAMES: [&'static str; 4] = ["sine", "multi-sine", "square-wave", "random"];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Sine => "sine",
            Self::MultiSine => "multi-sine",
            Self::SquareWave => "square-wave",
            Self::Random => "random",
        }
    }
}

impl FromStr for ProfileKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "sine" => Ok(Self::Sine),
            "multi-sine" => Ok(Self::MultiSine),
            "square-wave" => Ok(Self::SquareWave),
            "random" | "random-seeded" => Ok(Self::Random),
            _ => Err(format!(
                "unknown profile `{s}` (expected one of {})",
                Self::NAMES.join(", ")
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InitialSection {
    pub profile: ProfileKind,
    pub amplitude: f64,
    /// Subtract the discrete mean after sampling.
    pub zero_mean: bool,
    /// Added after the mean is removed.
    pub offset: f64,
    /// Number of modes for `multi-sine` and `random`.
    pub modes: usize,
    pub seed: u64,
}

impl Default for InitialSection {
    fn default() -> Self {
        Self {
            profile: ProfileKind::Sine,
            amplitude: 1.0,
            zero_mean: false,
            offset: 0.0,
            modes: 4,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConditionSection {
    pub delta: f64,
    /// Strictly decreasing.
    pub lambdas: Vec<f64>,
    pub directions: usize,
    pub radius_max: f64,
    pub resonant_samples: usize,
    pub lattice: bool,
    /// Largest |k_i| in lattice mode.
    pub lattice_max_index: i64,
}

impl ConditionSection {
    pub fn default_for(dimension: usize) -> Self {
        let plan = SamplingPlan::default_for(dimension);
        Self {
            delta: 1.0,
            lambdas: default_lambdas(),
            directions: plan.directions,
            radius_max: plan.radius_max,
            resonant_samples: plan.resonant_samples,
            lattice: false,
            lattice_max_index: 16,
        }
    }

    pub fn plan(&self, periods: &[f64]) -> SamplingPlan {
        SamplingPlan {
            directions: self.directions,
            radius_max: self.radius_max,
            resonant_samples: self.resonant_samples,
            lattice: self.lattice.then(|| LatticeSpec {
                periods: periods.to_vec(),
                max_index: self.lattice_max_index,
            }),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputSection {
    pub dir: PathBuf,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self { dir: PathBuf::from("out") }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub model: ModelSection,
    pub grid: GridSection,
    pub initial: InitialSection,
    pub scheme: SchemeConfig,
    pub condition: ConditionSection,
    pub output: OutputSection,
}

impl ExperimentConfig {
    /// Defaults for a preset: sine data, 256 cells (128² in 2D), t_end = 1.
    pub fn for_preset(name: &str) -> Option<Self> {
        let d = presets::by_name(name)?.dimension();
        let n = if d == 1 { 256 } else { 128 };
        Some(Self {
            model: ModelSection::preset(name),
            grid: GridSection {
                periods: vec![1.0; d],
                cells: vec![n; d],
            },
            initial: InitialSection::default(),
            scheme: SchemeConfig::new(1.0, 0.01),
            condition: ConditionSection::default_for(d),
            output: OutputSection::default(),
        })
    }

    pub fn dimension(&self) -> usize {
        self.grid.cells.len()
    }

    /// Canonical text form; `parse_config` of the result gives back `self`.
    pub fn serialize(&self) -> String {
        let mut s = String::new();
        let kv = |s: &mut String, k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };

        s.push_str("[model]\n");
        match &self.model.choice {
            ModelChoice::Preset(name) => kv(&mut s, "name", name.clone()),
            ModelChoice::Inline(m) => {
                kv(&mut s, "name", m.name.clone());
                kv(&mut s, "dimension", m.dimension.to_string());
                for (axis, c) in m.flux.iter().enumerate() {
                    kv(&mut s, &format!("flux{}", axis + 1), floats(c));
                }
                for (key, c) in ["A11", "A12", "A22"].iter().zip(&m.diffusion_upper) {
                    kv(&mut s, key, floats(c));
                }
            }
        }
        if let Some(m) = self.model.state_bound {
            kv(&mut s, "state_bound", float(m));
        }
        if let Some(t) = self.model.tol_psd {
            kv(&mut s, "tol_psd", float(t));
        }
        if let Some(t) = self.model.tol_factor {
            kv(&mut s, "tol_factor", float(t));
        }

        s.push_str("\n[grid]\n");
        kv(&mut s, "periods", floats(&self.grid.periods));
        kv(&mut s, "cells", list(&self.grid.cells));

        let i = &self.initial;
        s.push_str("\n[initial]\n");
        kv(&mut s, "profile", i.profile.as_str().into());
        kv(&mut s, "amplitude", float(i.amplitude));
        kv(&mut s, "zero_mean", i.zero_mean.to_string());
        kv(&mut s, "offset", float(i.offset));
        kv(&mut s, "modes", i.modes.to_string());
        kv(&mut s, "seed", i.seed.to_string());

        let sc = &self.scheme;
        s.push_str("\n[scheme]\n");
        kv(&mut s, "cfl", float(sc.cfl));
        kv(&mut s, "integrator", sc.integrator.as_str().into());
        kv(&mut s, "t_end", float(sc.t_end));
        kv(&mut s, "output_every", float(sc.output_every));
        if let Some(e) = sc.snapshot_every {
            kv(&mut s, "snapshot_every", float(e));
        }
        if !sc.checkpoints.is_empty() {
            kv(&mut s, "checkpoints", floats(&sc.checkpoints));
        }

        let c = &self.condition;
        s.push_str("\n[condition]\n");
        kv(&mut s, "delta", float(c.delta));
        kv(&mut s, "lambdas", floats(&c.lambdas));
        kv(&mut s, "directions", c.directions.to_string());
        kv(&mut s, "radius_max", float(c.radius_max));
        kv(&mut s, "resonant_samples", c.resonant_samples.to_string());
        kv(&mut s, "lattice", c.lattice.to_string());
        kv(&mut s, "lattice_max_index", c.lattice_max_index.to_string());

        s.push_str("\n[output]\n");
        kv(&mut s, "dir", self.output.dir.display().to_string());
        s
    }
}

/// Shortest representation that parses back to the same bits.
fn float(x: f64) -> String {
    format!("{x:?}")
}

fn floats(xs: &[f64]) -> String {
    xs.iter().map(|&x| float(x)).collect::<Vec<_>>().join(", ")
}

fn list<T: ToString>(xs: &[T]) -> String {
    xs.iter().map(T::to_string).collect::<Vec<_>>().join(", ")
}

const SECTIONS: [(&str, &[&str]); 6] = [
    (
        "model",
        &[
            "name",
            "dimension",
            "flux1",
            "flux2",
            "A11",
            "A12",
            "A22",
            "state_bound",
            "tol_psd",
            "tol_factor",
        ],
    ),
    ("grid", &["periods", "cells"]),
    (
        "initial",
        &["profile", "amplitude", "zero_mean", "offset", "modes", "seed"],
    ),
    (
        "scheme",
        &[
            "cfl",
            "integrator",
            "t_end",
            "output_every",
            "snapshot_every",
            "checkpoints",
        ],
    ),
    (
        "condition",
        &[
            "delta",
            "lambdas",
            "directions",
            "radius_max",
            "resonant_samples",
            "lattice",
            "lattice_max_index",
        ],
    ),
    ("output", &["dir"]),
];

const INLINE_KEYS: [&str; 5] = ["flux1", "flux2", "A11", "A12", "A22"];

struct Entry {
    value: String,
    line: usize,
}

/// Key-value pairs of one section plus the line of its header.
struct Section {
    line: usize,
    entries: BTreeMap<String, Entry>,
}

/// Typed reads that record problems instead of stopping at the first one.
struct Reader<'a> {
    sections: &'a BTreeMap<String, Section>,
    issues: Vec<ConfigIssue>,
}

impl Reader<'_> {
    fn issue(&mut self, line: Option<usize>, message: impl Into<String>) {
        self.issues.push(ConfigIssue {
            line,
            message: message.into(),
        });
    }

    fn entry(&self, section: &str, key: &str) -> Option<&Entry> {
        self.sections.get(section)?.entries.get(key)
    }

    fn has(&self, section: &str, key: &str) -> bool {
        self.entry(section, key).is_some()
    }

    fn line_of(&self, section: &str, key: &str) -> Option<usize> {
        self.entry(section, key)
            .map(|e| e.line)
            .or_else(|| self.sections.get(section).map(|s| s.line))
    }

    fn get<T>(
        &mut self,
        section: &str,
        key: &str,
        parse: impl Fn(&str) -> Result<T, String>,
    ) -> Option<T> {
        let (value, line) = {
            let e = self.entry(section, key)?;
            (e.value.clone(), e.line)
        };
        match parse(&value) {
            Ok(v) => Some(v),
            Err(msg) => {
                self.issue(Some(line), format!("{section}.{key}: {msg}"));
                None
            }
        }
    }
}

fn parse_f64(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(x) if x.is_finite() => Ok(x),
        Ok(_) => Err(format!("`{s}` is not finite")),
        Err(_) => Err(format!("malformed number `{s}`")),
    }
}

fn positive_f64(s: &str) -> Result<f64, String> {
    let x = parse_f64(s)?;
    if x > 0.0 {
        Ok(x)
    } else {
        Err(format!("must be positive, got {s}"))
    }
}

fn parse_int(s: &str) -> Result<i64, String> {
    s.parse::<i64>().map_err(|_| format!("malformed integer `{s}`"))
}

fn positive_usize(s: &str) -> Result<usize, String> {
    let n = parse_int(s)?;
    if n > 0 {
        Ok(n as usize)
    } else {
        Err(format!("must be a positive integer, got {s}"))
    }
}

fn parse_bool(s: &str) -> Result<bool, String> {
    match s {
        "true" => Ok(true),
        "false" => Ok(false),
        _ => Err(format!("expected `true` or `false`, got `{s}`")),
    }
}

fn parse_list<T>(s: &str, item: impl Fn(&str) -> Result<T, String>) -> Result<Vec<T>, String> {
    if s.trim().is_empty() {
        return Err("empty list".into());
    }
    s.split(',').map(|p| item(p.trim())).collect()
}

/// Parses and validates a configuration, filling defaults. All problems found
/// are reported together.
pub fn parse_config(text: &str) -> Result<ExperimentConfig, ConfigError> {
    let mut issues = Vec::new();
    let mut sections: BTreeMap<String, Section> = BTreeMap::new();
    let mut current: Option<String> = None;

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let t = raw.trim();
        if t.is_empty() || t.starts_with('#') || t.starts_with(';') {
            continue;
        }
        if let Some(rest) = t.strip_prefix('[') {
            let Some(name) = rest.strip_suffix(']').map(str::trim) else {
                issues.push(ConfigIssue {
                    line: Some(line),
                    message: format!("malformed section header `{t}`"),
                });
                current = None;
                continue;
            };
            if !SECTIONS.iter().any(|(s, _)| *s == name) {
                issues.push(ConfigIssue {
                    line: Some(line),
                    message: format!("unknown section `[{name}]`"),
                });
                current = None;
                continue;
            }
            if sections.contains_key(name) {
                issues.push(ConfigIssue {
                    line: Some(line),
                    message: format!("section `[{name}]` appears twice"),
                });
            }
            sections.entry(name.to_string()).or_insert(Section {
                line,
                entries: BTreeMap::new(),
            });
            current = Some(name.to_string());
            continue;
        }
        let Some((key, value)) = t.split_once('=') else {
            issues.push(ConfigIssue {
                line: Some(line),
                message: format!("expected `key = value`, got `{t}`"),
            });
            continue;
        };
        let (key, value) = (key.trim(), value.trim());
        let Some(section) = current.as_deref() else {
            issues.push(ConfigIssue {
                line: Some(line),
                message: format!("key `{key}` outside of any section"),
            });
            continue;
        };
        let known = SECTIONS.iter().find(|(s, _)| *s == section).map_or(&[][..], |s| s.1);
        if !known.contains(&key) {
            issues.push(ConfigIssue {
                line: Some(line),
                message: format!("unknown key `{key}` in [{section}]"),
            });
            continue;
        }
        let entries = &mut sections.get_mut(section).expect("section registered").entries;
        if entries.contains_key(key) {
            issues.push(ConfigIssue {
                line: Some(line),
                message: format!("duplicate key `{key}` in [{section}]"),
            });
            continue;
        }
        entries.insert(
            key.to_string(),
            Entry {
                value: value.to_string(),
                line,
            },
        );
    }

    let mut r = Reader {
        sections: &sections,
        issues,
    };
    for required in ["model", "grid", "scheme"] {
        if !sections.contains_key(required) {
            r.issue(None, format!("missing required section `[{required}]`"));
        }
    }

    let model = read_model(&mut r);
    let dimension = model.as_ref().and_then(ModelSection::dimension);
    let grid = read_grid(&mut r, dimension);
    let initial = read_initial(&mut r);
    let scheme = read_scheme(&mut r);
    let condition = read_condition(&mut r, dimension.unwrap_or(1));
    let output = OutputSection {
        dir: r
            .get("output", "dir", |s| {
                if s.is_empty() {
                    Err("empty path".into())
                } else {
                    Ok(PathBuf::from(s))
                }
            })
            .unwrap_or_else(|| OutputSection::default().dir),
    };

    let issues = r.issues;
    match (model, grid, scheme) {
        (Some(model), Some(grid), Some(scheme)) if issues.is_empty() => Ok(ExperimentConfig {
            model,
            grid,
            initial,
            scheme,
            condition,
            output,
        }),
        _ => Err(ConfigError { issues }),
    }
}

fn read_model(r: &mut Reader) -> Option<ModelSection> {
    if !r.sections.contains_key("model") {
        return None;
    }
    let state_bound = r.get("model", "state_bound", positive_f64);
    let tol_psd = r.get("model", "tol_psd", positive_f64);
    let tol_factor = r.get("model", "tol_factor", positive_f64);
    let name = r.get("model", "name", |s| Ok(s.to_string()));
    let inline = INLINE_KEYS.iter().any(|k| r.has("model", k));

    let choice = if inline {
        let explicit_dim = r.get("model", "dimension", |s| {
            let d = parse_int(s)?;
            if d == 1 || d == 2 {
                Ok(d as usize)
            } else {
                Err(format!("dimension must be 1 or 2, got {s}"))
            }
        });
        let implied_2d = ["flux2", "A12", "A22"].iter().any(|k| r.has("model", k));
        let d = explicit_dim.unwrap_or(if implied_2d { 2 } else { 1 });
        if d == 1 && implied_2d {
            r.issue(
                r.line_of("model", "dimension"),
                "flux2, A12 and A22 need dimension = 2",
            );
            return None;
        }
        let coeffs = |r: &mut Reader, key: &str| {
            r.get("model", key, |s| parse_list(s, parse_f64))
                .unwrap_or_else(|| vec![0.0])
        };
        let flux = (1..=d).map(|i| coeffs(r, &format!("flux{i}"))).collect();
        let keys: &[&str] = if d == 1 { &["A11"] } else { &["A11", "A12", "A22"] };
        let diffusion_upper = keys.iter().map(|k| coeffs(r, k)).collect();
        ModelChoice::Inline(InlineModel {
            name: name.unwrap_or_else(|| "custom".into()),
            dimension: d,
            flux,
            diffusion_upper,
        })
    } else {
        if r.has("model", "dimension") {
            r.issue(
                r.line_of("model", "dimension"),
                "dimension is only used with an inline model (flux1, A11, ...)",
            );
        }
        let Some(name) = name else {
            r.issue(
                r.line_of("model", ""),
                "[model] needs `name` (a preset) or inline coefficients",
            );
            return None;
        };
        if presets::by_name(&name).is_none() {
            r.issue(
                r.line_of("model", "name"),
                format!(
                    "unknown preset `{name}` (expected one of {})",
                    presets::NAMES.join(", ")
                ),
            );
            return None;
        }
        ModelChoice::Preset(name)
    };
    Some(ModelSection {
        choice,
        state_bound,
        tol_psd,
        tol_factor,
    })
}

fn read_grid(r: &mut Reader, dimension: Option<usize>) -> Option<GridSection> {
    if !r.sections.contains_key("grid") {
        return None;
    }
    let Some(mut cells) = r.get("grid", "cells", |s| parse_list(s, positive_usize)) else {
        if !r.has("grid", "cells") {
            r.issue(r.line_of("grid", ""), "missing required key `grid.cells`");
        }
        return None;
    };
    let d = dimension.unwrap_or(cells.len());
    if cells.len() == 1 && d == 2 {
        cells.push(cells[0]);
    }
    if cells.len() != d {
        r.issue(
            r.line_of("grid", "cells"),
            format!("grid.cells: {} entries for a {d}-dimensional model", cells.len()),
        );
        return None;
    }
    if let Some(&n) = cells.iter().find(|&&n| n < crate::solver::MIN_CELLS) {
        r.issue(
            r.line_of("grid", "cells"),
            format!("grid.cells: at least {} cells per axis, got {n}", crate::solver::MIN_CELLS),
        );
        return None;
    }
    let periods = match r.get("grid", "periods", |s| parse_list(s, positive_f64)) {
        Some(mut p) => {
            if p.len() == 1 && d == 2 {
                p.push(p[0]);
            }
            if p.len() != d {
                r.issue(
                    r.line_of("grid", "periods"),
                    format!("grid.periods: {} entries for a {d}-dimensional model", p.len()),
                );
                return None;
            }
            p
        }
        None if r.has("grid", "periods") => return None,
        None => vec![1.0; d],
    };
    Some(GridSection { periods, cells })
}

fn read_initial(r: &mut Reader) -> InitialSection {
    let d = InitialSection::default();
    InitialSection {
        profile: r.get("initial", "profile", str::parse).unwrap_or(d.profile),
        amplitude: r.get("initial", "amplitude", parse_f64).unwrap_or(d.amplitude),
        zero_mean: r.get("initial", "zero_mean", parse_bool).unwrap_or(d.zero_mean),
        offset: r.get("initial", "offset", parse_f64).unwrap_or(d.offset),
        modes: r.get("initial", "modes", positive_usize).unwrap_or(d.modes),
        seed: r
            .get("initial", "seed", |s| {
                s.parse::<u64>()
                    .map_err(|_| format!("seed must be a non-negative integer, got `{s}`"))
            })
            .unwrap_or(d.seed),
    }
}

fn read_scheme(r: &mut Reader) -> Option<SchemeConfig> {
    if !r.sections.contains_key("scheme") {
        return None;
    }
    let t_end = r.get("scheme", "t_end", parse_f64);
    if t_end.is_none() && !r.has("scheme", "t_end") {
        r.issue(r.line_of("scheme", ""), "missing required key `scheme.t_end`");
    }
    let cfl = r.get("scheme", "cfl", positive_f64);
    let integrator = r.get("scheme", "integrator", |s| {
        Integrator::parse(s).ok_or_else(|| format!("unknown integrator `{s}` (euler, ssp-rk2)"))
    });
    let output_every = r.get("scheme", "output_every", positive_f64);
    let snapshot_every = r.get("scheme", "snapshot_every", positive_f64);
    let checkpoints = r.get("scheme", "checkpoints", |s| parse_list(s, parse_f64));

    let t_end = t_end?;
    let mut scheme = SchemeConfig::new(t_end, output_every.unwrap_or(t_end / 100.0));
    if let Some(c) = cfl {
        scheme.cfl = c;
    }
    if let Some(i) = integrator {
        scheme.integrator = i;
    }
    scheme.snapshot_every = snapshot_every;
    scheme.checkpoints = checkpoints.unwrap_or_default();
    if let Err(e) = scheme.validate() {
        let msg = match e {
            SolverError::InvalidConfig(m) => m,
            other => other.to_string(),
        };
        r.issue(r.line_of("scheme", "t_end"), format!("scheme: {msg}"));
        return None;
    }
    Some(scheme)
}

fn read_condition(r: &mut Reader, dimension: usize) -> ConditionSection {
    let d = ConditionSection::default_for(dimension);
    let lambdas = r
        .get("condition", "lambdas", |s| {
            let l = parse_list(s, positive_f64)?;
            if l.windows(2).any(|w| !(w[1] < w[0])) {
                return Err("lambdas must be strictly decreasing".into());
            }
            Ok(l)
        })
        .unwrap_or(d.lambdas);
    ConditionSection {
        delta: r.get("condition", "delta", positive_f64).unwrap_or(d.delta),
        lambdas,
        directions: r
            .get("condition", "directions", positive_usize)
            .unwrap_or(d.directions),
        radius_max: r
            .get("condition", "radius_max", positive_f64)
            .unwrap_or(d.radius_max),
        resonant_samples: r
            .get("condition", "resonant_samples", positive_usize)
            .unwrap_or(d.resonant_samples),
        lattice: r.get("condition", "lattice", parse_bool).unwrap_or(d.lattice),
        lattice_max_index: r
            .get("condition", "lattice_max_index", |s| {
                positive_usize(s).map(|n| n as i64)
            })
            .unwrap_or(d.lattice_max_index),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "[model]\nname = burgers\n\n[grid]\ncells = 64\n\n[scheme]\nt_end = 0.5\n";

    #[test]
    fn minimal_config_gets_defaults() {
        let c = parse_config(MINIMAL).unwrap();
        assert_eq!(c.model, ModelSection::preset("burgers"));
        assert_eq!(c.grid.periods, vec![1.0]);
        assert_eq!(c.grid.cells, vec![64]);
        assert_eq!(c.scheme.cfl, 0.4);
        assert_eq!(c.scheme.integrator, Integrator::SspRk2);
        assert_eq!(c.scheme.output_every, 0.005);
        assert_eq!(c.initial, InitialSection::default());
        assert_eq!(c.condition.lambdas, default_lambdas());
        assert_eq!(c.output.dir, PathBuf::from("out"));
    }

    #[test]
    fn negative_cells_names_the_line() {
        let text = "[model]\nname = burgers\n[grid]\ncells = -4\n[scheme]\nt_end = 1\n";
        let err = parse_config(text).unwrap_err();
        assert_eq!(err.issues.len(), 1);
        assert_eq!(err.issues[0].line, Some(4));
        assert!(err.to_string().starts_with("line 4:"), "{err}");
    }

    #[test]
    fn problems_are_collected() {
        let text = "[model]\nname = burgers\ncolour = red\n[grid]\ncells = 64\nperiods = 1.0x\n[scheme]\nt_end = 1\n[bogus]\n";
        let err = parse_config(text).unwrap_err();
        let lines: Vec<_> = err.issues.iter().map(|i| i.line).collect();
        assert_eq!(lines, vec![Some(3), Some(9), Some(6)]);
        assert!(err.issues[2].message.contains("malformed number"));
    }

    #[test]
    fn missing_sections_and_t_end() {
        let err = parse_config("[scheme]\ncfl = 0.3\n").unwrap_err();
        let text = err.to_string();
        assert!(text.contains("[model]") && text.contains("[grid]") && text.contains("t_end"), "{text}");
    }

    #[test]
    fn unknown_preset_is_rejected() {
        let err = parse_config(&MINIMAL.replace("burgers", "navier-stokes")).unwrap_err();
        assert_eq!(err.issues[0].line, Some(2));
    }

    #[test]
    fn inline_model_round_trips() {
        let text = "[model]\nA11 = 0,0,1\nflux1 = 0, 0, 0.5\n[grid]\ncells = 32\n[scheme]\nt_end = 0.1\n";
        let c = parse_config(text).unwrap();
        let ModelChoice::Inline(m) = &c.model.choice else {
            panic!("expected an inline model")
        };
        assert_eq!(m.diffusion_upper, vec![vec![0.0, 0.0, 1.0]]);
        assert_eq!(m.dimension, 1);
        let again = parse_config(&c.serialize()).unwrap();
        assert_eq!(again, c);
        assert_eq!(again.serialize(), c.serialize());
        let model = c.model.build().unwrap();
        assert_eq!(model.diffusion_eval(0.5).unwrap().get(0, 0), 0.25);
    }

    #[test]
    fn two_dimensional_inline_model_expands_cells() {
        let text = "[model]\nflux1 = 0,1\nflux2 = 0,0,0.5\nA22 = 0,0,1\n[grid]\ncells = 16\n[scheme]\nt_end = 0.1\n";
        let c = parse_config(text).unwrap();
        assert_eq!(c.grid.cells, vec![16, 16]);
        assert_eq!(c.grid.periods, vec![1.0, 1.0]);
        assert_eq!(c.condition.directions, 256);
        assert_eq!(parse_config(&c.serialize()).unwrap(), c);
    }

    #[test]
    fn dimension_mismatch() {
        let text = "[model]\nname = anisotropic-2d\n[grid]\ncells = 16, 16, 16\n[scheme]\nt_end = 0.1\n";
        let err = parse_config(text).unwrap_err();
        assert_eq!(err.issues[0].line, Some(4));
    }

    #[test]
    fn lambdas_must_decrease() {
        let text = format!("{MINIMAL}[condition]\nlambdas = 1e-2, 1e-1\n");
        let err = parse_config(&text).unwrap_err();
        assert_eq!(err.issues[0].line, Some(10));
    }
}
