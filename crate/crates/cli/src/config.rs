//! Scenario files: TOML documents of unit-suffixed parameters layered over
//! named presets.
//!
//! Every scenario resolves to a flat map of `section.key` paths covering the
//! whole schema, so a run never depends on values outside its manifest.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::Range;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};
use sivsim_core::siv;
use sivsim_core::spin::{noise_preset, NoisePsd, NOISE_PRESET_NAMES};
use toml_edit::{Document, DocumentMut, Item, Value};

use crate::units::{parse_quantity, Dimension};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Quantity(Dimension),
    /// Quantity or the string `"auto"`.
    Optional(Dimension),
    Quantities(Dimension),
    Count,
    Counts,
    Flag,
    Choice(&'static [&'static str]),
}

#[derive(Debug, Clone, Copy)]
enum Def {
    Num(f64),
    Int(u64),
    Text(&'static str),
    Flag(bool),
    Nums(&'static [f64]),
    Ints(&'static [u64]),
    Auto,
}

#[derive(Debug, Clone, Copy)]
pub struct KeySpec {
    pub path: &'static str,
    pub kind: Kind,
    default: Def,
}

const fn key(path: &'static str, kind: Kind, default: Def) -> KeySpec {
    KeySpec { path, kind, default }
}

use Dimension::{
    Angle, AngularRate, Dimensionless as One, Frequency as Hz, MagneticField, SpectralDensity, Temperature as K,
    Time as S,
};
use Kind::{Choice, Count, Counts, Flag, Optional, Quantities, Quantity};

const SEQUENCES: &[&str] = &["cpmg", "ramsey"];
const NOISE_MODELS: &[&str] = &["ornstein-uhlenbeck", "power-law", "quasi-static"];

pub const SCHEMA: &[KeySpec] = &[
    key("level.delta_gs", Quantity(Hz), Def::Num(45e9)),
    key("level.strain_splitting", Quantity(Hz), Def::Num(0.0)),
    key("level.b_field", Quantities(MagneticField), Def::Nums(&[0.0, 0.0, 0.0])),
    key("level.spin_g_factor", Quantity(One), Def::Num(2.0)),
    key("level.orbital_quenching", Quantity(One), Def::Num(0.1)),
    key("emitter.zpl_frequency", Quantity(Hz), Def::Num(406.7e12)),
    key("emitter.lifetime", Quantity(S), Def::Num(1.73e-9)),
    key("emitter.gamma_rad", Quantity(Hz), Def::Num(94e6)),
    key("emitter.gamma_dephasing", Quantity(Hz), Def::Num(41e6)),
    key("emitter.zpl_branching", Quantity(One), Def::Num(0.7)),
    key("emitter.inhomogeneous_width", Quantity(Hz), Def::Num(1e9)),
    key("bath.temperature", Quantity(K), Def::Num(5.0)),
    key("bath.calibration_delta", Quantity(Hz), Def::Num(45e9)),
    key("bath.calibration_temperature", Quantity(K), Def::Num(5.0)),
    key("bath.calibration_time", Quantity(S), Def::Num(39e-9)),
    key("bath.empirical_prefactor", Quantity(S), Def::Num(200e-9)),
    key("bath.activation_temperature", Quantity(K), Def::Num(2.4)),
    key("cavity.resonance", Optional(Hz), Def::Auto),
    key("cavity.kappa", Quantity(Hz), Def::Num(57e9)),
    key("cavity.g", Quantity(Hz), Def::Num(2.1e9)),
    key("cavity.cooperativity", Quantity(One), Def::Num(0.0)),
    key("cavity.emitter_offsets", Quantities(Hz), Def::Nums(&[0.0])),
    key("relaxation.t_min", Quantity(K), Def::Num(4.5)),
    key("relaxation.t_max", Quantity(K), Def::Num(22.0)),
    key("relaxation.points", Count, Def::Int(36)),
    key("relaxation.duration", Quantity(S), Def::Num(200e-9)),
    key("relaxation.time_points", Count, Def::Int(201)),
    key("thermal.t_min", Quantity(K), Def::Num(0.1)),
    key("thermal.t_max", Quantity(K), Def::Num(10.0)),
    key("thermal.points", Count, Def::Int(41)),
    key("thermal.polarized_below", Quantity(K), Def::Num(0.5)),
    key("spectrum.span", Quantity(Hz), Def::Num(300e9)),
    key("spectrum.points", Count, Def::Int(601)),
    key("spectrum.center", Optional(Hz), Def::Auto),
    key("spectrum.drive_photons", Optional(One), Def::Auto),
    key("extinction.target", Quantity(One), Def::Num(0.38)),
    key("extinction.efficiency", Optional(One), Def::Auto),
    key("extinction.span", Quantity(Hz), Def::Num(5e9)),
    key("extinction.points", Count, Def::Int(201)),
    key("saturation.photons", Quantities(One), Def::Nums(&[1e-6, 1e-4, 1e-3, 1e-2, 3e-2, 0.1, 0.3])),
    key("saturation.half_saturation", Flag, Def::Flag(false)),
    key("g2.photons", Quantity(One), Def::Num(1e-4)),
    key("g2.detuning", Quantity(Hz), Def::Num(0.0)),
    key("g2.tau_max", Quantity(S), Def::Num(20e-9)),
    key("g2.points", Count, Def::Int(401)),
    key("hom.linewidth_1", Quantity(Hz), Def::Num(135e6)),
    key("hom.linewidth_2", Quantity(Hz), Def::Num(136e6)),
    key("hom.detuning", Quantity(Hz), Def::Num(52e6)),
    key("hom.lifetime", Quantity(S), Def::Num(1.73e-9)),
    key("hom.emission_rate", Quantity(Hz), Def::Num(1e5)),
    key("hom.tau_max", Quantity(S), Def::Num(40e-9)),
    key("hom.points", Count, Def::Int(801)),
    key("hom.fit", Flag, Def::Flag(true)),
    key("hom.jitter", Quantity(S), Def::Num(0.0)),
    key("hom.background", Quantity(One), Def::Num(0.0)),
    key("hom.dark_rate", Quantity(Hz), Def::Num(0.0)),
    key("hom.bin", Quantity(S), Def::Num(0.0)),
    key("hom.target_parallel", Quantity(One), Def::Num(0.26)),
    key("hom.target_parallel_err", Quantity(One), Def::Num(0.05)),
    key("hom.target_perpendicular", Quantity(One), Def::Num(0.66)),
    key("hom.target_perpendicular_err", Quantity(One), Def::Num(0.08)),
    key("hom.sigma_max", Quantity(S), Def::Num(2e-9)),
    key("raman.detunings", Quantities(Hz), Def::Nums(&[0.0, 1e9, 2e9, 3e9, 4e9, 5e9, 6e9, 10e9])),
    key("raman.drive_rabi", Quantity(Hz), Def::Num(0.5e9)),
    key("raman.control_phase", Quantity(Angle), Def::Num(0.0)),
    key("waveguide.lifetime", Quantity(S), Def::Num(1.73e-9)),
    key("waveguide.split", Quantity(Hz), Def::Num(1e9)),
    key("waveguide.raman_detuning", Quantity(Hz), Def::Num(2e9)),
    key("waveguide.drive_rabi", Quantity(Hz), Def::Num(0.3e9)),
    key("waveguide.couplings", Quantities(One), Def::Nums(&[1.0, 1.0])),
    key("waveguide.relative_phase", Quantity(Angle), Def::Num(0.0)),
    key("waveguide.single_target", Quantity(One), Def::Num(0.16)),
    key("waveguide.untuned_target", Quantity(One), Def::Num(0.63)),
    key("waveguide.sigma_max", Quantity(S), Def::Num(5e-9)),
    key("waveguide.tau_max", Quantity(S), Def::Num(20e-9)),
    key("waveguide.points", Count, Def::Int(401)),
    key("spin.sequence", Choice(SEQUENCES), Def::Text("cpmg")),
    key("spin.orders", Counts, Def::Ints(&[1, 2, 4, 8, 16, 32])),
    key("spin.t1", Optional(S), Def::Auto),
    key("spin.t1_temperature", Optional(K), Def::Auto),
    key("spin.curve_points", Count, Def::Int(60)),
    key("spin.curve_span", Quantity(One), Def::Num(3.0)),
    key("spin.detuning", Quantity(Hz), Def::Num(0.0)),
    key("spin.trajectories", Count, Def::Int(0)),
    key("spin.mc_orders", Counts, Def::Ints(&[])),
    key("noise.model", Choice(NOISE_MODELS), Def::Text("power-law")),
    key("noise.sigma", Quantity(AngularRate), Def::Num(0.0)),
    key("noise.tau_c", Quantity(S), Def::Num(1.0)),
    key("noise.amplitude", Quantity(SpectralDensity), Def::Num(0.0)),
    key("noise.exponent", Quantity(One), Def::Num(0.0)),
    key("noise.low_cutoff", Quantity(AngularRate), Def::Num(0.0)),
    key("noise.high_cutoff", Quantity(AngularRate), Def::Num(f64::INFINITY)),
];

pub const PRESET_KINDS: [&str; 4] = ["emitter", "cavity", "bath", "noise"];
pub const CAVITY_PRESETS: [&str; 1] = ["paper-nanocavity"];
pub const BATH_PRESETS: [&str; 1] = ["diamond"];
const DEFAULT_PRESETS: [(&str, &str); 4] =
    [("emitter", "siv-bulk"), ("cavity", "paper-nanocavity"), ("bath", "diamond"), ("noise", "linear-scaling")];

fn preset_names(kind: &str) -> &'static [&'static str] {
    match kind {
        "emitter" => &siv::PRESET_NAMES,
        "cavity" => &CAVITY_PRESETS,
        "bath" => &BATH_PRESETS,
        _ => &NOISE_PRESET_NAMES,
    }
}

pub fn spec(path: &str) -> Option<&'static KeySpec> {
    SCHEMA.iter().find(|k| k.path == path)
}

fn sections() -> Vec<&'static str> {
    let mut out: Vec<&str> = SCHEMA.iter().map(|k| k.path.split_once('.').unwrap().0).collect();
    out.dedup();
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum ParamValue {
    Number(f64),
    Count(u64),
    Text(String),
    Flag(bool),
    Numbers(Vec<f64>),
    Counts(Vec<u64>),
    Auto,
}

impl From<Def> for ParamValue {
    fn from(d: Def) -> Self {
        match d {
            Def::Num(x) => ParamValue::Number(x),
            Def::Int(n) => ParamValue::Count(n),
            Def::Text(s) => ParamValue::Text(s.to_owned()),
            Def::Flag(b) => ParamValue::Flag(b),
            Def::Nums(v) => ParamValue::Numbers(v.to_vec()),
            Def::Ints(v) => ParamValue::Counts(v.to_vec()),
            Def::Auto => ParamValue::Auto,
        }
    }
}

/// Fully resolved parameters keyed by `section.key`.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct Params(BTreeMap<String, ParamValue>);

impl Params {
    fn defaults() -> Self {
        Params(SCHEMA.iter().map(|k| (k.path.to_owned(), k.default.into())).collect())
    }

    fn value(&self, path: &str) -> &ParamValue {
        self.0.get(path).unwrap_or_else(|| panic!("`{path}` is not a schema key"))
    }

    pub fn get(&self, path: &str) -> Option<&ParamValue> {
        self.0.get(path)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &ParamValue)> {
        self.0.iter()
    }

    pub fn num(&self, path: &str) -> f64 {
        match self.value(path) {
            ParamValue::Number(x) => *x,
            ParamValue::Count(n) => *n as f64,
            other => panic!("`{path}` holds {other:?}, not a number"),
        }
    }

    pub fn count(&self, path: &str) -> u64 {
        match self.value(path) {
            ParamValue::Count(n) => *n,
            other => panic!("`{path}` holds {other:?}, not a count"),
        }
    }

    pub fn text(&self, path: &str) -> &str {
        match self.value(path) {
            ParamValue::Text(s) => s,
            other => panic!("`{path}` holds {other:?}, not text"),
        }
    }

    pub fn flag(&self, path: &str) -> bool {
        match self.value(path) {
            ParamValue::Flag(b) => *b,
            other => panic!("`{path}` holds {other:?}, not a flag"),
        }
    }

    pub fn nums(&self, path: &str) -> &[f64] {
        match self.value(path) {
            ParamValue::Numbers(v) => v,
            other => panic!("`{path}` holds {other:?}, not a list"),
        }
    }

    pub fn counts(&self, path: &str) -> &[u64] {
        match self.value(path) {
            ParamValue::Counts(v) => v,
            other => panic!("`{path}` holds {other:?}, not a count list"),
        }
    }

    /// `None` for `"auto"`.
    pub fn optional(&self, path: &str) -> Option<f64> {
        match self.value(path) {
            ParamValue::Auto => None,
            ParamValue::Number(x) => Some(*x),
            other => panic!("`{path}` holds {other:?}, not an optional quantity"),
        }
    }

    fn set(&mut self, path: &str, value: ParamValue) {
        self.0.insert(path.to_owned(), value);
    }

    /// Noise spectrum described by the `noise.*` keys.
    pub fn noise(&self) -> NoisePsd {
        match self.text("noise.model") {
            "ornstein-uhlenbeck" => {
                NoisePsd::OrnsteinUhlenbeck { sigma: self.num("noise.sigma"), tau_c: self.num("noise.tau_c") }
            }
            "quasi-static" => NoisePsd::QuasiStaticGaussian { sigma: self.num("noise.sigma") },
            _ => NoisePsd::PowerLaw {
                amplitude: self.num("noise.amplitude"),
                exponent: self.num("noise.exponent"),
                low_cutoff: self.num("noise.low_cutoff"),
                high_cutoff: self.num("noise.high_cutoff"),
            },
        }
    }

    /// Recomputes the derived pair (cooperativity, g). `from_cooperativity`
    /// picks the direction.
    fn settle_cooperativity(&mut self, from_cooperativity: bool) {
        let gamma = self.num("emitter.gamma_rad") + self.num("emitter.gamma_dephasing");
        let kappa = self.num("cavity.kappa");
        if from_cooperativity {
            let c = self.num("cavity.cooperativity");
            self.set("cavity.g", ParamValue::Number((c * kappa * gamma / 4.0).sqrt()));
        } else {
            let g = self.num("cavity.g");
            self.set("cavity.cooperativity", ParamValue::Number(4.0 * g * g / (kappa * gamma)));
        }
    }

    fn apply_preset(&mut self, kind: &str, name: &str) {
        let num = |x: f64| ParamValue::Number(x);
        match kind {
            "emitter" => {
                let p = siv::preset(name).expect("preset names are checked before use");
                self.set("level.delta_gs", num(p.level.delta_gs));
                self.set("level.strain_splitting", num(p.level.strain_splitting));
                self.set("level.b_field", ParamValue::Numbers(p.level.b_field.to_vec()));
                self.set("level.spin_g_factor", num(p.level.spin_g_factor));
                self.set("level.orbital_quenching", num(p.level.orbital_quenching));
                self.set("emitter.zpl_frequency", num(p.emitter.zpl_frequency));
                self.set("emitter.lifetime", num(p.emitter.lifetime));
                self.set("emitter.gamma_rad", num(p.emitter.gamma_rad));
                self.set("emitter.gamma_dephasing", num(p.emitter.gamma_dephasing));
                self.set("emitter.zpl_branching", num(p.emitter.zpl_branching));
                self.set("emitter.inhomogeneous_width", num(p.emitter.inhomogeneous_width));
            }
            "cavity" => {
                self.set("cavity.kappa", num(57e9));
                self.set("cavity.g", num(2.1e9));
            }
            "bath" => {
                self.set("bath.calibration_delta", num(45e9));
                self.set("bath.calibration_temperature", num(siv::REFERENCE_TEMPERATURE));
                self.set("bath.calibration_time", num(siv::REFERENCE_RELAXATION_TIME));
                let law = siv::EmpiricalOrbitalRate::default();
                self.set("bath.empirical_prefactor", num(law.prefactor));
                self.set("bath.activation_temperature", num(law.activation_temperature));
            }
            _ => {
                let psd = noise_preset(name).expect("preset names are checked before use");
                for k in ["noise.sigma", "noise.tau_c", "noise.amplitude", "noise.exponent", "noise.low_cutoff", "noise.high_cutoff"] {
                    self.set(k, spec(k).unwrap().default.into());
                }
                match psd {
                    NoisePsd::OrnsteinUhlenbeck { sigma, tau_c } => {
                        self.set("noise.model", ParamValue::Text("ornstein-uhlenbeck".into()));
                        self.set("noise.sigma", num(sigma));
                        self.set("noise.tau_c", num(tau_c));
                    }
                    NoisePsd::QuasiStaticGaussian { sigma } => {
                        self.set("noise.model", ParamValue::Text("quasi-static".into()));
                        self.set("noise.sigma", num(sigma));
                    }
                    NoisePsd::PowerLaw { amplitude, exponent, low_cutoff, high_cutoff } => {
                        self.set("noise.model", ParamValue::Text("power-law".into()));
                        self.set("noise.amplitude", num(amplitude));
                        self.set("noise.exponent", num(exponent));
                        self.set("noise.low_cutoff", num(low_cutoff));
                        self.set("noise.high_cutoff", num(high_cutoff));
                    }
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Sweep {
    pub path: String,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct SweepPoint {
    pub index: usize,
    pub assignments: Vec<(String, f64)>,
    pub params: Params,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Location {
    pub line: usize,
    pub column: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub origin: Option<PathBuf>,
    pub location: Option<Location>,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let origin = self.origin.as_ref().map_or("<scenario>".to_owned(), |p| p.display().to_string());
        match self.location {
            Some(l) => write!(f, "{origin}:{}:{}: {}", l.line, l.column, self.message),
            None => write!(f, "{origin}: {}", self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub seed: u64,
    pub output: Option<PathBuf>,
    pub presets: BTreeMap<String, String>,
    pub params: Params,
    pub sweeps: Vec<Sweep>,
}

pub fn parse_scenario(path: &Path) -> Result<Scenario, ConfigError> {
    let src = std::fs::read_to_string(path).map_err(|e| ConfigError {
        origin: Some(path.to_owned()),
        location: None,
        message: format!("cannot read scenario: {e}"),
    })?;
    let mut scenario = parse_scenario_str(&src, Some(path))?;
    if scenario.name.is_empty() {
        scenario.name = path.file_stem().map_or("scenario".into(), |s| s.to_string_lossy().into_owned());
    }
    Ok(scenario)
}

/// Parses scenario text. `origin` only labels error messages.
pub fn parse_scenario_str(src: &str, origin: Option<&Path>) -> Result<Scenario, ConfigError> {
    Parser { src, origin }.parse()
}

struct Parser<'a> {
    src: &'a str,
    origin: Option<&'a Path>,
}

fn span_of(item: &Item) -> Option<Range<usize>> {
    item.span().or_else(|| item.as_value().and_then(Value::span))
}

impl Parser<'_> {
    fn locate(&self, offset: usize) -> Location {
        let before = &self.src[..offset.min(self.src.len())];
        let line = before.matches('\n').count() + 1;
        let column = before.rfind('\n').map_or(before.chars().count(), |n| before[n + 1..].chars().count()) + 1;
        Location { line, column }
    }

    fn error(&self, span: Option<Range<usize>>, message: impl Into<String>) -> ConfigError {
        ConfigError {
            origin: self.origin.map(Path::to_owned),
            location: span.map(|s| self.locate(s.start)),
            message: message.into(),
        }
    }

    fn parse(&self) -> Result<Scenario, ConfigError> {
        let doc = Document::parse(self.src.to_owned())
            .map_err(|e| self.error(e.span(), format!("malformed scenario: {}", e.message().trim())))?;
        let root = doc.as_table();
        let sections = sections();
        let mut name = String::new();
        let mut seed = 0u64;
        let mut output = None;
        let mut presets: BTreeMap<String, String> =
            DEFAULT_PRESETS.iter().map(|(k, v)| ((*k).to_owned(), (*v).to_owned())).collect();
        let mut overrides: Vec<(&'static KeySpec, ParamValue, Option<Range<usize>>)> = Vec::new();
        let mut sweeps = Vec::new();

        for (k, item) in root.iter() {
            let key_span = root.get_key_value(k).and_then(|(key, _)| key.span());
            let at = span_of(item).or(key_span.clone());
            match k {
                "name" => {
                    name = item.as_str().ok_or_else(|| self.error(at, "`name` must be a string"))?.to_owned();
                }
                "seed" => {
                    let v = item.as_integer().filter(|v| *v >= 0);
                    seed = v.ok_or_else(|| self.error(at, "`seed` must be a non-negative integer"))? as u64;
                }
                "output" => {
                    output = Some(PathBuf::from(item.as_str().ok_or_else(|| self.error(at, "`output` must be a string"))?));
                }
                "presets" => {
                    let table = item.as_table_like().ok_or_else(|| self.error(at, "`presets` must be a table"))?;
                    for (kind, value) in table.iter() {
                        let kspan = table.get_key_value(kind).and_then(|(key, _)| key.span());
                        if !PRESET_KINDS.contains(&kind) {
                            return Err(self.unknown(kspan, &format!("presets.{kind}"), kind, PRESET_KINDS.iter().map(|p| format!("presets.{p}")).collect()));
                        }
                        let vspan = span_of(value).or(kspan);
                        let preset = value.as_str().ok_or_else(|| self.error(vspan.clone(), format!("preset `{kind}` must be a string")))?;
                        let names = preset_names(kind);
                        if !names.contains(&preset) {
                            let hint = suggest(preset, names.iter().map(|s| s.to_string()).collect())
                                .map_or_else(|| format!(" (known: {})", names.join(", ")), |s| format!("; did you mean `{s}`?"));
                            return Err(self.error(vspan, format!("unknown {kind} preset `{preset}`{hint}")));
                        }
                        presets.insert(kind.to_owned(), preset.to_owned());
                    }
                }
                "sweep" => {
                    let aot = item.as_array_of_tables().ok_or_else(|| self.error(at, "`sweep` must be written as [[sweep]] tables"))?;
                    for table in aot.iter() {
                        sweeps.push(self.sweep(table)?);
                    }
                }
                section if sections.contains(&section) => {
                    let table = item.as_table_like().ok_or_else(|| self.error(at, format!("`{section}` must be a table")))?;
                    for (leaf, value) in table.iter() {
                        let kspan = table.get_key_value(leaf).and_then(|(key, _)| key.span());
                        let path = format!("{section}.{leaf}");
                        let Some(spec) = spec(&path) else {
                            return Err(self.unknown(kspan, &path, leaf, SCHEMA.iter().map(|k| k.path.to_owned()).collect()));
                        };
                        let vspan = span_of(value).or(kspan.clone());
                        let parsed = parse_value(spec.kind, value).map_err(|m| self.error(vspan, format!("`{path}`: {m}")))?;
                        overrides.push((spec, parsed, kspan));
                    }
                }
                other => {
                    let mut candidates: Vec<String> = ["name", "seed", "output", "presets", "sweep"].map(String::from).to_vec();
                    candidates.extend(sections.iter().map(|s| s.to_string()));
                    candidates.extend(SCHEMA.iter().map(|k| k.path.to_owned()));
                    return Err(self.unknown(key_span, other, other, candidates));
                }
            }
        }

        let mut params = Params::defaults();
        for kind in PRESET_KINDS {
            params.apply_preset(kind, &presets[kind]);
        }
        let explicit: BTreeMap<&str, Option<Range<usize>>> =
            overrides.iter().map(|(spec, _, span)| (spec.path, span.clone())).collect();
        for (spec, value, _) in overrides {
            params.set(spec.path, value);
        }
        let span = |path: &str| explicit.get(path).cloned().flatten();
        match (explicit.contains_key("cavity.cooperativity"), explicit.contains_key("cavity.g")) {
            (true, false) => params.settle_cooperativity(true),
            (true, true) => {
                let given = params.num("cavity.cooperativity");
                params.settle_cooperativity(false);
                let implied = params.num("cavity.cooperativity");
                if (implied / given - 1.0).abs() > 1e-9 {
                    return Err(self.error(
                        span("cavity.cooperativity"),
                        format!("`cavity.cooperativity` = {given} disagrees with `cavity.g`, which implies {implied}; set only one"),
                    ));
                }
                params.set("cavity.cooperativity", ParamValue::Number(given));
            }
            _ => params.settle_cooperativity(false),
        }
        validate(&params).map_err(|(path, m)| self.error(span(path), format!("`{path}`: {m}")))?;
        for s in &sweeps {
            let mut probe = params.clone();
            for &v in &s.values {
                assign(&mut probe, &s.path, v);
                validate(&probe).map_err(|(path, m)| self.error(None, format!("sweep of `{}` = {v}: `{path}`: {m}", s.path)))?;
            }
        }
        Ok(Scenario { name, seed, output, presets, params, sweeps })
    }

    fn sweep(&self, table: &toml_edit::Table) -> Result<Sweep, ConfigError> {
        let at = table.span();
        for (k, _) in table.iter() {
            if k != "path" && k != "values" {
                let kspan = table.get_key_value(k).and_then(|(key, _)| key.span());
                return Err(self.unknown(kspan, &format!("sweep.{k}"), k, vec!["sweep.path".into(), "sweep.values".into()]));
            }
        }
        let path_item = table.get("path").ok_or_else(|| self.error(at.clone(), "sweep needs `path`"))?;
        let pspan = span_of(path_item);
        let path = path_item.as_str().ok_or_else(|| self.error(pspan.clone(), "sweep `path` must be a string"))?;
        let spec = spec(path).ok_or_else(|| {
            let hint = suggest(path, SCHEMA.iter().map(|k| k.path.to_owned()).collect())
                .map_or(String::new(), |s| format!("; did you mean `{s}`?"));
            self.error(pspan.clone(), format!("sweep path `{path}` is not a known parameter{hint}"))
        })?;
        let values_item = table.get("values").ok_or_else(|| self.error(at, "sweep needs `values`"))?;
        let vspan = span_of(values_item);
        let values = match spec.kind {
            Quantity(d) => match parse_value(Quantities(d), values_item) {
                Ok(ParamValue::Numbers(v)) => v,
                Err(m) => return Err(self.error(vspan, format!("sweep of `{path}`: {m}"))),
                _ => unreachable!(),
            },
            Count => match parse_value(Counts, values_item) {
                Ok(ParamValue::Counts(v)) => v.into_iter().map(|n| n as f64).collect(),
                Err(m) => return Err(self.error(vspan, format!("sweep of `{path}`: {m}"))),
                _ => unreachable!(),
            },
            _ => return Err(self.error(pspan, format!("`{path}` is not a scalar quantity and cannot be swept"))),
        };
        if values.is_empty() {
            return Err(self.error(vspan, "sweep `values` is empty"));
        }
        Ok(Sweep { path: path.to_owned(), values })
    }

    fn unknown(&self, span: Option<Range<usize>>, path: &str, leaf: &str, candidates: Vec<String>) -> ConfigError {
        // Match the final segment first so `[cavity] cooperativty` finds
        // `cavity.cooperativity`, preferring the section the key was in.
        let leaf_of = |c: &String| (c.rsplit('.').next().unwrap_or(c).to_owned(), c.clone());
        let section = path.split_once('.').map(|(s, _)| s);
        let same: Vec<&String> = candidates.iter().filter(|c| section.is_some() && c.split_once('.').map(|(s, _)| s) == section).collect();
        let hit = best_match(leaf, same.into_iter().map(leaf_of))
            .or_else(|| best_match(leaf, candidates.iter().map(leaf_of)))
            .or_else(|| suggest(path, candidates));
        let hint = hit.map_or(String::new(), |s| format!("; did you mean `{s}`?"));
        self.error(span, format!("unknown key `{path}`{hint}"))
    }
}

fn best_match(word: &str, candidates: impl Iterator<Item = (String, String)>) -> Option<String> {
    candidates
        .map(|(probe, label)| (strsim::levenshtein(word, &probe), label))
        .filter(|(d, _)| *d <= (word.chars().count() / 3).max(2))
        .min_by(|a, b| a.0.cmp(&b.0).then_with(|| a.1.cmp(&b.1)))
        .map(|(_, label)| label)
}

fn suggest(word: &str, candidates: Vec<String>) -> Option<String> {
    best_match(word, candidates.into_iter().map(|c| (c.clone(), c)))
}

fn quantity(value: &Value, dim: Dimension) -> Result<f64, String> {
    let x = match value {
        Value::Integer(i) => *i.value() as f64,
        Value::Float(f) => *f.value(),
        Value::String(s) => parse_quantity(s.value(), dim)?,
        _ => return Err(format!("expected a number or a string such as \"1 {}\"", dim.base_unit())),
    };
    if x.is_nan() {
        return Err("value is NaN".into());
    }
    Ok(x)
}

fn count(value: &Value) -> Result<u64, String> {
    match value {
        Value::Integer(i) if *i.value() >= 0 => Ok(*i.value() as u64),
        _ => Err("expected a non-negative integer".into()),
    }
}

fn parse_value(kind: Kind, item: &Item) -> Result<ParamValue, String> {
    let value = item.as_value().ok_or("expected a value, found a table")?;
    let array = || value.as_array().ok_or_else(|| "expected an array".to_owned());
    Ok(match kind {
        Quantity(d) => ParamValue::Number(quantity(value, d)?),
        Optional(d) => match value.as_str() {
            Some("auto") => ParamValue::Auto,
            _ => ParamValue::Number(quantity(value, d).map_err(|m| format!("{m} (or \"auto\")"))?),
        },
        Quantities(d) => ParamValue::Numbers(array()?.iter().map(|v| quantity(v, d)).collect::<Result<_, _>>()?),
        Count => ParamValue::Count(count(value)?),
        Counts => ParamValue::Counts(array()?.iter().map(count).collect::<Result<_, _>>()?),
        Flag => ParamValue::Flag(value.as_bool().ok_or("expected true or false")?),
        Choice(options) => {
            let s = value.as_str().ok_or("expected a string")?;
            if !options.contains(&s) {
                return Err(format!("`{s}` is not one of: {}", options.join(", ")));
            }
            ParamValue::Text(s.to_owned())
        }
    })
}

fn assign(params: &mut Params, path: &str, value: f64) {
    let v = match spec(path).map(|s| s.kind) {
        Some(Count) => ParamValue::Count(value as u64),
        _ => ParamValue::Number(value),
    };
    params.set(path, v);
    params.settle_cooperativity(path == "cavity.cooperativity");
}

/// Cross-key checks that the schema types cannot express.
fn validate(p: &Params) -> Result<(), (&'static str, String)> {
    let finite = SCHEMA.iter().filter(|k| matches!(k.kind, Quantity(_))).find(|k| {
        let x = p.num(k.path);
        x.is_nan() || (x.is_infinite() && k.path != "noise.high_cutoff")
    });
    if let Some(k) = finite {
        return Err((k.path, "must be finite".into()));
    }
    if p.nums("level.b_field").len() != 3 {
        return Err(("level.b_field", "needs three components [Bx, By, Bz]".into()));
    }
    if p.nums("cavity.emitter_offsets").is_empty() {
        return Err(("cavity.emitter_offsets", "needs one entry per emitter".into()));
    }
    if p.nums("waveguide.couplings").len() != 2 {
        return Err(("waveguide.couplings", "needs exactly two entries".into()));
    }
    for (lo, hi) in [("relaxation.t_min", "relaxation.t_max"), ("thermal.t_min", "thermal.t_max")] {
        if !(p.num(lo) > 0.0 && p.num(hi) > p.num(lo)) {
            return Err((hi, format!("needs 0 < {lo} < {hi}")));
        }
    }
    for k in ["relaxation.points", "relaxation.time_points", "thermal.points", "spectrum.points", "extinction.points", "g2.points", "hom.points", "waveguide.points", "spin.curve_points"] {
        if p.count(k) < 2 {
            return Err((k, "needs at least two points".into()));
        }
    }
    if p.counts("spin.orders").is_empty() || p.counts("spin.orders").contains(&0) {
        return Err(("spin.orders", "needs one or more pulse counts ≥ 1".into()));
    }
    if p.optional("spin.t1").is_some() && p.optional("spin.t1_temperature").is_some() {
        return Err(("spin.t1_temperature", "set either `spin.t1` or `spin.t1_temperature`, not both".into()));
    }
    Ok(())
}

impl Scenario {
    /// SHA-256 of the canonical JSON of the resolved parameters and sweeps.
    /// Insensitive to key order, presets used, name, output and seed.
    pub fn hash(&self) -> String {
        let canonical = serde_json::json!({ "params": self.params, "sweeps": self.sweeps });
        hex::encode(Sha256::digest(canonical.to_string().as_bytes()))
    }

    /// Cartesian product of the sweep axes, first axis slowest. A scenario
    /// without sweeps has one point.
    pub fn sweep_points(&self) -> Vec<SweepPoint> {
        let mut points = vec![(Vec::new(), self.params.clone())];
        for s in &self.sweeps {
            points = points
                .into_iter()
                .flat_map(|(assigned, params): (Vec<(String, f64)>, Params)| {
                    s.values.iter().map(move |&v| {
                        let mut p = params.clone();
                        assign(&mut p, &s.path, v);
                        let mut a = assigned.clone();
                        a.push((s.path.clone(), v));
                        (a, p)
                    })
                })
                .collect();
        }
        points.into_iter().enumerate().map(|(index, (assignments, params))| SweepPoint { index, assignments, params }).collect()
    }

    /// Normalized TOML: every key explicit, plain SI numbers.
    pub fn to_toml(&self) -> String {
        let mut doc = DocumentMut::new();
        if !self.name.is_empty() {
            doc["name"] = toml_edit::value(self.name.as_str());
        }
        doc["seed"] = toml_edit::value(self.seed as i64);
        if let Some(out) = &self.output {
            doc["output"] = toml_edit::value(out.display().to_string());
        }
        let mut presets = toml_edit::Table::new();
        for (k, v) in &self.presets {
            presets[k.as_str()] = toml_edit::value(v.as_str());
        }
        doc["presets"] = Item::Table(presets);
        for section in sections() {
            let mut table = toml_edit::Table::new();
            for spec in SCHEMA.iter().filter(|k| k.path.split_once('.').unwrap().0 == section) {
                let leaf = spec.path.split_once('.').unwrap().1;
                table[leaf] = toml_edit::value(to_toml_value(self.params.value(spec.path)));
            }
            doc[section] = Item::Table(table);
        }
        if !self.sweeps.is_empty() {
            let mut aot = toml_edit::ArrayOfTables::new();
            for s in &self.sweeps {
                let mut t = toml_edit::Table::new();
                t["path"] = toml_edit::value(s.path.as_str());
                t["values"] = toml_edit::value(s.values.iter().copied().collect::<toml_edit::Array>());
                aot.push(t);
            }
            doc["sweep"] = Item::ArrayOfTables(aot);
        }
        doc.to_string()
    }
}

fn to_toml_value(v: &ParamValue) -> Value {
    match v {
        ParamValue::Number(x) => (*x).into(),
        ParamValue::Count(n) => (*n as i64).into(),
        ParamValue::Text(s) => s.as_str().into(),
        ParamValue::Flag(b) => (*b).into(),
        ParamValue::Numbers(xs) => Value::Array(xs.iter().copied().collect()),
        ParamValue::Counts(ns) => Value::Array(ns.iter().map(|&n| n as i64).collect()),
        ParamValue::Auto => "auto".into(),
    }
}
