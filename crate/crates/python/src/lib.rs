//! Python bindings. Quantities are plain floats in the same units as the
//! Rust API: Hz for frequencies, s for times, K for temperatures, rad/s for
//! noise amplitudes.

use std::path::PathBuf;

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::{PyBool, PyDict, PyList, PyString};
use serde_json::Value;

use sivsim_cli::commands::{self, Command, Seeds};
use sivsim_cli::{parse_scenario, parse_scenario_str, run_scenario, CliError};
use sivsim_core::cavity::{
    self, drive_for_photons, CavityParams, CoupledEmitter, CoupledSystem, DriveParams, Port, TransmissionMode,
};
use sivsim_core::interference::{self, DetectorModel, SinglePhotonSource, TwoEmitterWaveguide};
use sivsim_core::qdyn::TimeGrid;
use sivsim_core::siv::{self, PhononBathParams};
use sivsim_core::spin::{self, NoisePsd, SequenceKind};

fn core_err(e: sivsim_core::Error) -> PyErr {
    match e {
        sivsim_core::Error::InvalidParameter(_) | sivsim_core::Error::DimensionMismatch { .. } => {
            PyValueError::new_err(e.to_string())
        }
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

fn cli_err(e: CliError) -> PyErr {
    match e {
        CliError::Config(_) | CliError::Input(_) => PyValueError::new_err(e.to_string()),
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

fn to_py<'py>(py: Python<'py>, v: &Value) -> PyResult<Bound<'py, PyAny>> {
    Ok(match v {
        Value::Null => py.None().into_bound(py),
        Value::Bool(b) => PyBool::new(py, *b).to_owned().into_any(),
        Value::Number(n) => match n.as_i64() {
            Some(i) => i.into_pyobject(py)?.into_any(),
            None => n.as_f64().unwrap_or(f64::NAN).into_pyobject(py)?.into_any(),
        },
        Value::String(s) => PyString::new(py, s).into_any(),
        Value::Array(items) => {
            let list = PyList::empty(py);
            for x in items {
                list.append(to_py(py, x)?)?;
            }
            list.into_any()
        }
        Value::Object(map) => {
            let dict = PyDict::new(py);
            for (k, x) in map {
                dict.set_item(k, to_py(py, x)?)?;
            }
            dict.into_any()
        }
    })
}

fn serialize<'py, T: serde::Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let v = serde_json::to_value(value).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    to_py(py, &v)
}

fn command(name: &str) -> PyResult<Command> {
    Command::from_name(name).ok_or_else(|| {
        let known: Vec<&str> = Command::ALL.iter().map(|c| c.name()).collect();
        PyValueError::new_err(format!("unknown command '{name}'; expected one of {}", known.join(", ")))
    })
}

fn emitter_preset(name: &str) -> PyResult<siv::SivPreset> {
    siv::preset(name).ok_or_else(|| {
        PyValueError::new_err(format!("unknown emitter preset '{name}'; expected one of {}", siv::PRESET_NAMES.join(", ")))
    })
}

/// Parsed simulation scenario.
#[pyclass(name = "Scenario", module = "sivsim", frozen)]
struct PyScenario {
    inner: sivsim_cli::Scenario,
}

#[pymethods]
impl PyScenario {
    #[staticmethod]
    fn from_file(path: PathBuf) -> PyResult<Self> {
        Ok(Self { inner: parse_scenario(&path).map_err(|e| cli_err(e.into()))? })
    }

    #[staticmethod]
    fn from_str(text: &str) -> PyResult<Self> {
        Ok(Self { inner: parse_scenario_str(text, None).map_err(|e| cli_err(e.into()))? })
    }

    #[getter]
    fn name(&self) -> &str {
        &self.inner.name
    }

    #[getter]
    fn seed(&self) -> u64 {
        self.inner.seed
    }

    #[getter]
    fn hash(&self) -> String {
        self.inner.hash()
    }

    /// Resolved parameters keyed by dotted path.
    fn parameters<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        serialize(py, &self.inner.params)
    }

    fn to_toml(&self) -> String {
        self.inner.to_toml()
    }

    /// Runs `command` and returns the JSON summary. With `out_dir`, also
    /// writes the CSV tables and manifest there.
    #[pyo3(signature = (command_name, out_dir=None, jobs=1))]
    fn run<'py>(
        &self,
        py: Python<'py>,
        command_name: &str,
        out_dir: Option<PathBuf>,
        jobs: usize,
    ) -> PyResult<Bound<'py, PyAny>> {
        let cmd = command(command_name)?;
        match out_dir {
            Some(dir) => {
                let scenario = self.inner.clone();
                let summary_path = dir.join(sivsim_cli::run::SUMMARY_FILE);
                py.detach(|| run_scenario(cmd, &scenario, &dir, jobs)).map_err(cli_err)?;
                let text = std::fs::read_to_string(&summary_path).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
                let v: Value = serde_json::from_str(&text).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
                to_py(py, &v)
            }
            None => {
                let scenario = self.inner.clone();
                let (_, summary) = py.detach(|| sivsim_cli::run::evaluate(cmd, &scenario, jobs)).map_err(cli_err)?;
                to_py(py, &summary)
            }
        }
    }

    fn __repr__(&self) -> String {
        format!("Scenario(name={:?}, seed={}, hash={:.12})", self.inner.name, self.inner.seed, self.inner.hash())
    }
}

/// Cavity coupled to one or more emitters.
#[pyclass(name = "CavitySystem", module = "sivsim", frozen)]
struct PyCavity {
    inner: CoupledSystem,
}

#[pymethods]
impl PyCavity {
    /// `emitter_offsets` places one emitter per entry relative to the cavity
    /// resonance, which sits at the preset ZPL.
    #[new]
    #[pyo3(signature = (g=2.1e9, kappa=57e9, emitter="siv-nano", emitter_offsets=vec![0.0]))]
    fn new(g: f64, kappa: f64, emitter: &str, emitter_offsets: Vec<f64>) -> PyResult<Self> {
        let optical = emitter_preset(emitter)?.emitter;
        let emitters = emitter_offsets
            .iter()
            .map(|&d| CoupledEmitter { optical: siv::EmitterOpticalParams { zpl_frequency: optical.zpl_frequency + d, ..optical }, g })
            .collect();
        let inner = CoupledSystem { cavity: CavityParams::symmetric(optical.zpl_frequency, kappa), emitters };
        inner.validate().map_err(core_err)?;
        Ok(Self { inner })
    }

    #[getter]
    fn resonance(&self) -> f64 {
        self.inner.cavity.resonance
    }

    fn cooperativity(&self) -> PyResult<f64> {
        self.inner.cooperativity().map_err(core_err)
    }

    fn purcell_lifetime(&self) -> PyResult<f64> {
        cavity::purcell_lifetime(&self.inner).map_err(core_err)
    }

    /// Transmission at `detunings` from the cavity resonance, normalized to
    /// the bare-cavity peak. Linear response unless `drive_photons` is given.
    #[pyo3(signature = (detunings, drive_photons=None))]
    fn transmission(&self, py: Python<'_>, detunings: Vec<f64>, drive_photons: Option<f64>) -> PyResult<Vec<f64>> {
        let freqs: Vec<f64> = detunings.iter().map(|d| self.inner.cavity.resonance + d).collect();
        let mode = match drive_photons {
            None => TransmissionMode::WeakDrive,
            Some(n) => TransmissionMode::Driven { amplitude: drive_for_photons(&self.inner.cavity, n) },
        };
        let sys = &self.inner;
        let spec = py.detach(|| cavity::transmission_spectrum(sys, &freqs, mode)).map_err(core_err)?;
        Ok(spec.into_iter().map(|p| p.transmission).collect())
    }

    /// Steady state under a drive giving `drive_photons` in the empty cavity.
    #[pyo3(signature = (drive_photons, detuning=0.0))]
    fn steady_state<'py>(&self, py: Python<'py>, drive_photons: f64, detuning: f64) -> PyResult<Bound<'py, PyDict>> {
        let drive = DriveParams {
            frequency: self.inner.cavity.resonance + detuning,
            amplitude: drive_for_photons(&self.inner.cavity, drive_photons),
        };
        let ss = cavity::driven_steady_state(&self.inner, &drive).map_err(core_err)?;
        let d = PyDict::new(py);
        d.set_item("transmission", ss.transmission)?;
        d.set_item("total_transmission", ss.total_transmission)?;
        d.set_item("intracavity_photons", ss.intracavity_photons)?;
        d.set_item("emitter_excitation", ss.emitter_excitation.clone())?;
        d.set_item("fock_cutoff", ss.fock_cutoff)?;
        Ok(d)
    }

    /// Normalized `g²(τ)` of the `"transmitted"` or `"scattered"` field.
    #[pyo3(signature = (port, drive_photons=1e-4, tau_max=20e-9, points=201, detuning=0.0))]
    fn g2(
        &self,
        py: Python<'_>,
        port: &str,
        drive_photons: f64,
        tau_max: f64,
        points: usize,
        detuning: f64,
    ) -> PyResult<Vec<f64>> {
        let port = match port {
            "transmitted" => Port::Transmitted,
            "scattered" => Port::Scattered,
            other => return Err(PyValueError::new_err(format!("port must be 'transmitted' or 'scattered', got '{other}'"))),
        };
        let drive = DriveParams {
            frequency: self.inner.cavity.resonance + detuning,
            amplitude: drive_for_photons(&self.inner.cavity, drive_photons),
        };
        let grid = TimeGrid::new(0.0, tau_max, points).map_err(core_err)?;
        let sys = &self.inner;
        py.detach(|| cavity::photon_statistics(sys, &drive, port, &grid)).map_err(core_err)
    }

    fn half_saturation<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        let hs = cavity::half_saturation(&self.inner).map_err(core_err)?;
        serialize(py, &hs)
    }
}

/// Dephasing noise spectrum.
#[pyclass(name = "NoisePsd", module = "sivsim", frozen)]
struct PyNoise {
    inner: NoisePsd,
}

#[pymethods]
impl PyNoise {
    #[staticmethod]
    fn ornstein_uhlenbeck(sigma: f64, tau_c: f64) -> PyResult<Self> {
        Self::checked(NoisePsd::OrnsteinUhlenbeck { sigma, tau_c })
    }

    #[staticmethod]
    fn quasi_static(sigma: f64) -> PyResult<Self> {
        Self::checked(NoisePsd::QuasiStaticGaussian { sigma })
    }

    #[staticmethod]
    #[pyo3(signature = (amplitude, exponent, low_cutoff=0.0, high_cutoff=f64::INFINITY))]
    fn power_law(amplitude: f64, exponent: f64, low_cutoff: f64, high_cutoff: f64) -> PyResult<Self> {
        Self::checked(NoisePsd::PowerLaw { amplitude, exponent, low_cutoff, high_cutoff })
    }

    #[staticmethod]
    fn preset(name: &str) -> PyResult<Self> {
        Ok(Self { inner: spin::noise_preset(name).map_err(core_err)? })
    }

    /// Exact T2 (coherence 1/e) of CPMG-`n`, or Ramsey when `n` is 0.
    #[pyo3(signature = (n, t1=None))]
    fn t2(&self, n: u32, t1: Option<f64>) -> PyResult<f64> {
        spin::filter_t2(&self.inner, &sequence(n), t1).map_err(core_err)
    }

    /// Coherence of CPMG-`n` (Ramsey when `n` is 0) at total times `taus`.
    /// A T2 fit runs alongside, so at least two delays must land in the
    /// decay window.
    #[pyo3(signature = (n, taus, t1=None))]
    fn coherence(&self, n: u32, taus: Vec<f64>, t1: Option<f64>) -> PyResult<Vec<f64>> {
        let res = if n == 0 {
            spin::ramsey_decay(&self.inner, 0.0, &taus, t1)
        } else {
            spin::cpmg_coherence(&self.inner, n, &taus, t1)
        }
        .map_err(core_err)?;
        Ok(res.decay_curve.iter().map(|p| p.coherence).collect())
    }

    /// Monte-Carlo estimate with `trajectories` noise realizations. Same
    /// grid requirement as `coherence`.
    #[pyo3(signature = (n, taus, trajectories=1000, seed=0, t1=None))]
    fn monte_carlo(
        &self,
        py: Python<'_>,
        n: u32,
        taus: Vec<f64>,
        trajectories: usize,
        seed: u64,
        t1: Option<f64>,
    ) -> PyResult<Vec<f64>> {
        let psd = self.inner;
        let res = py
            .detach(|| spin::monte_carlo_coherence(&psd, sequence(n), &taus, trajectories, seed, t1))
            .map_err(core_err)?;
        Ok(res.decay_curve.iter().map(|p| p.coherence).collect())
    }

    fn __repr__(&self) -> String {
        format!("NoisePsd({:?})", self.inner)
    }
}

impl PyNoise {
    fn checked(inner: NoisePsd) -> PyResult<Self> {
        inner.validate().map_err(core_err)?;
        Ok(Self { inner })
    }
}

fn sequence(n: u32) -> SequenceKind {
    if n == 0 {
        SequenceKind::Ramsey
    } else {
        SequenceKind::Cpmg { n }
    }
}

/// `(γ₊, γ₋)` in 1/s for an orbital gap `delta` (Hz) at `temperature` (K),
/// with the coupling calibrated to 39 ns at 45 GHz and 5 K unless given.
#[pyfunction]
#[pyo3(signature = (delta, temperature, coupling_density_product=None))]
fn phonon_rates(delta: f64, temperature: f64, coupling_density_product: Option<f64>) -> PyResult<(f64, f64)> {
    let base = emitter_preset("siv-bulk")?;
    let level = siv::SivLevelParams { delta_gs: delta, strain_splitting: 0.0, ..base.level };
    let chi = match coupling_density_product {
        Some(c) => c,
        None => siv::calibrate_coupling(45e9, siv::REFERENCE_TEMPERATURE, 1.0 / siv::REFERENCE_RELAXATION_TIME)
            .map_err(core_err)?,
    };
    let r = siv::phonon_rates(&level, &PhononBathParams { coupling_density_product: chi, temperature }).map_err(core_err)?;
    Ok((r.gamma_plus, r.gamma_minus))
}

/// Upper-to-lower branch intensity ratio in thermal equilibrium.
#[pyfunction]
fn thermal_line_ratio(delta: f64, temperature: f64) -> f64 {
    siv::thermal_line_ratio(delta, temperature)
}

/// Coincidence `g²(τ)` behind a beamsplitter for two single-photon sources.
#[pyfunction]
#[pyo3(signature = (taus, linewidth_1=135e6, linewidth_2=136e6, detuning=52e6, lifetime=1.73e-9,
                    perpendicular=false, jitter=0.0, background=0.0))]
#[allow(clippy::too_many_arguments)]
fn hom_g2(
    taus: Vec<f64>,
    linewidth_1: f64,
    linewidth_2: f64,
    detuning: f64,
    lifetime: f64,
    perpendicular: bool,
    jitter: f64,
    background: f64,
) -> PyResult<Vec<f64>> {
    let s1 = SinglePhotonSource {
        frequency: 406.7e12,
        linewidth: linewidth_1,
        lifetime,
        polarization_angle: 0.0,
        emission_rate: 1e5,
        background_fraction: background,
    };
    let s2 = SinglePhotonSource {
        frequency: s1.frequency + detuning,
        linewidth: linewidth_2,
        polarization_angle: if perpendicular { 0.5 * std::f64::consts::PI } else { 0.0 },
        ..s1
    };
    let detector = DetectorModel { timing_jitter_sigma: jitter, ..DetectorModel::ideal() };
    Ok(interference::hom_g2(&s1, &s2, &detector, &taus).map_err(core_err)?.g2)
}

/// Emission rate of the symmetric two-emitter state relative to one emitter.
#[pyfunction]
#[pyo3(signature = (couplings=(1.0, 1.0), relative_phase=0.0))]
fn superradiant_rate(couplings: (f64, f64), relative_phase: f64) -> PyResult<f64> {
    let zpl = 406.7e12;
    let source = SinglePhotonSource {
        frequency: zpl,
        linewidth: 1.0 / (2.0 * std::f64::consts::PI * 1.73e-9),
        lifetime: 1.73e-9,
        polarization_angle: 0.0,
        emission_rate: 1e5,
        background_fraction: 0.0,
    };
    let raman = interference::RamanConfig { drive_detuning: 2e9, transition_frequency: zpl, control_phase: 0.0, drive_rabi: 0.3e9 };
    let system = TwoEmitterWaveguide {
        sources: [source, source],
        raman: [raman, raman],
        relative_phase,
        tuned: true,
        couplings: [couplings.0, couplings.1],
    };
    interference::superradiant_rate(&system).map_err(core_err)
}

/// Runs one subcommand on resolved parameters without touching disk.
#[pyfunction]
fn run_command<'py>(py: Python<'py>, command_name: &str, scenario: &PyScenario) -> PyResult<Bound<'py, PyAny>> {
    let cmd = command(command_name)?;
    let s = &scenario.inner;
    let out = commands::run(cmd, &s.params, &Seeds::new(&s.hash(), s.seed, 0)).map_err(core_err)?;
    to_py(py, &out.summary)
}

#[pymodule]
fn sivsim(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyScenario>()?;
    m.add_class::<PyCavity>()?;
    m.add_class::<PyNoise>()?;
    m.add_function(wrap_pyfunction!(phonon_rates, m)?)?;
    m.add_function(wrap_pyfunction!(thermal_line_ratio, m)?)?;
    m.add_function(wrap_pyfunction!(hom_g2, m)?)?;
    m.add_function(wrap_pyfunction!(superradiant_rate, m)?)?;
    m.add_function(wrap_pyfunction!(run_command, m)?)?;
    m.add("EMITTER_PRESETS", siv::PRESET_NAMES.to_vec())?;
    m.add("NOISE_PRESETS", spin::NOISE_PRESET_NAMES.to_vec())?;
    m.add("COMMANDS", Command::ALL.iter().map(|c| c.name()).collect::<Vec<_>>())?;
    Ok(())
}
