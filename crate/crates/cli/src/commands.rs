//! Physics subcommands. Each maps resolved parameters to tables plus a JSON
//! summary; nothing here touches the filesystem.

use std::f64::consts::PI;
use std::fmt;

use serde_json::{json, Value as Json};
use sha2::{Digest, Sha256};
use sivsim_core::cavity::{
    drive_for_photons, driven_steady_state, extinction, find_dips, fit_extinction_efficiency, half_saturation,
    linear_transmission_amplitude, photon_statistics, saturation_curve, transmission_spectrum, CavityParams,
    CoupledEmitter, CoupledSystem, DriveParams, Port, TransmissionMode, WEAK_DRIVE_PHOTONS,
};
use sivsim_core::interference::{
    calibrate_waveguide, fit_hom_imperfections, hom_g2, hom_visibility, raman_spectrum, single_emitter_g2,
    superradiant_rate, waveguide_g2, DetectorModel, HomTargets, RamanConfig, SinglePhotonSource, TwoEmitterWaveguide,
    RAMAN_TUNING_RANGE,
};
use sivsim_core::numeric::line_fit;
use sivsim_core::qdyn::TimeGrid;
use sivsim_core::siv::{
    calibrate_coupling, fit_delta_from_line_ratio, linear_rate_approx, orbital_relaxation_trajectory,
    orbital_splitting, phonon_rates, thermal_line_ratio, Branch, EmitterOpticalParams, EmpiricalOrbitalRate,
    PhononBathParams, SivLevelParams,
};
use sivsim_core::spin::{
    cpmg_coherence, filter_t2, monte_carlo_coherence, ramsey_decay, t2_scaling_fit, CoherenceResult, SequenceKind,
};
use sivsim_core::{Error, Result};

use crate::config::Params;
use crate::table::Table;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    Relaxation,
    Thermal,
    Spectrum,
    Extinction,
    Saturation,
    G2,
    Hom,
    Raman,
    Superradiance,
    Spin,
}

impl Command {
    pub const ALL: [Command; 10] = [
        Command::Relaxation,
        Command::Thermal,
        Command::Spectrum,
        Command::Extinction,
        Command::Saturation,
        Command::G2,
        Command::Hom,
        Command::Raman,
        Command::Superradiance,
        Command::Spin,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Command::Relaxation => "relaxation",
            Command::Thermal => "thermal",
            Command::Spectrum => "spectrum",
            Command::Extinction => "extinction",
            Command::Saturation => "saturation",
            Command::G2 => "g2",
            Command::Hom => "hom",
            Command::Raman => "raman",
            Command::Superradiance => "superradiance",
            Command::Spin => "spin",
        }
    }

    pub fn from_name(name: &str) -> Option<Command> {
        Command::ALL.into_iter().find(|c| c.name() == name)
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Result of one sweep point.
#[derive(Debug, Clone, PartialEq)]
pub struct Output {
    pub tables: Vec<Table>,
    pub summary: Json,
}

/// Deterministic per-stream seeds derived from the scenario hash, the user
/// seed and the sweep point.
#[derive(Debug, Clone)]
pub struct Seeds {
    base: [u8; 32],
}

impl Seeds {
    pub fn new(scenario_hash: &str, seed: u64, point: usize) -> Self {
        let digest = Sha256::digest(format!("{scenario_hash}/{seed}/{point}").as_bytes());
        Self { base: digest.into() }
    }

    pub fn stream(&self, label: &str) -> u64 {
        let mut h = Sha256::new();
        h.update(self.base);
        h.update(label.as_bytes());
        let d = h.finalize();
        u64::from_le_bytes(d[..8].try_into().expect("digest has 32 bytes"))
    }
}

pub fn run(command: Command, p: &Params, seeds: &Seeds) -> Result<Output> {
    match command {
        Command::Relaxation => relaxation(p),
        Command::Thermal => thermal(p),
        Command::Spectrum => spectrum(p),
        Command::Extinction => extinction_cmd(p),
        Command::Saturation => saturation(p),
        Command::G2 => g2(p),
        Command::Hom => hom(p),
        Command::Raman => raman(p),
        Command::Superradiance => superradiance(p),
        Command::Spin => spin(p, seeds),
    }
}

fn level(p: &Params) -> SivLevelParams {
    let b = p.nums("level.b_field");
    SivLevelParams {
        delta_gs: p.num("level.delta_gs"),
        strain_splitting: p.num("level.strain_splitting"),
        b_field: [b[0], b[1], b[2]],
        spin_g_factor: p.num("level.spin_g_factor"),
        orbital_quenching: p.num("level.orbital_quenching"),
    }
}

fn emitter(p: &Params) -> EmitterOpticalParams {
    EmitterOpticalParams {
        zpl_frequency: p.num("emitter.zpl_frequency"),
        lifetime: p.num("emitter.lifetime"),
        gamma_rad: p.num("emitter.gamma_rad"),
        gamma_dephasing: p.num("emitter.gamma_dephasing"),
        zpl_branching: p.num("emitter.zpl_branching"),
        inhomogeneous_width: p.num("emitter.inhomogeneous_width"),
    }
}

fn empirical_law(p: &Params) -> EmpiricalOrbitalRate {
    EmpiricalOrbitalRate {
        prefactor: p.num("bath.empirical_prefactor"),
        activation_temperature: p.num("bath.activation_temperature"),
    }
}

fn coupling_density(p: &Params) -> Result<f64> {
    calibrate_coupling(
        p.num("bath.calibration_delta"),
        p.num("bath.calibration_temperature"),
        1.0 / p.num("bath.calibration_time"),
    )
}

fn system(p: &Params) -> CoupledSystem {
    let optical = emitter(p);
    let resonance = p.optional("cavity.resonance").unwrap_or(optical.zpl_frequency);
    let emitters = p
        .nums("cavity.emitter_offsets")
        .iter()
        .map(|&offset| CoupledEmitter {
            optical: EmitterOpticalParams { zpl_frequency: optical.zpl_frequency + offset, ..optical },
            g: p.num("cavity.g"),
        })
        .collect();
    CoupledSystem { cavity: CavityParams::symmetric(resonance, p.num("cavity.kappa")), emitters }
}

fn linspace(lo: f64, hi: f64, n: u64) -> Vec<f64> {
    let n = n as usize;
    (0..n).map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64).collect()
}

fn logspace(lo: f64, hi: f64, n: u64) -> Vec<f64> {
    linspace(lo.ln(), hi.ln(), n).into_iter().map(f64::exp).collect()
}

/// Odd grid symmetric about zero that contains `τ = 0` exactly.
fn symmetric_delays(tau_max: f64, points: u64) -> Vec<f64> {
    let half = (points.max(3) / 2) as i64;
    let step = tau_max / half as f64;
    (-half..=half).map(|k| k as f64 * step).collect()
}

fn to_json<T: serde::Serialize>(value: &T) -> Json {
    serde_json::to_value(value).expect("summary types serialize")
}

fn relaxation(p: &Params) -> Result<Output> {
    let level = level(p);
    let chi_rho = coupling_density(p)?;
    let law = empirical_law(p);
    let temps = linspace(p.num("relaxation.t_min"), p.num("relaxation.t_max"), p.count("relaxation.points"));
    let mut rates = Table::new(
        "rates",
        &[
            ("temperature", "K"),
            ("gamma_plus", "1/s"),
            ("gamma_minus", "1/s"),
            ("total_rate", "1/s"),
            ("relaxation_time", "s"),
            ("gamma_plus_linear", "1/s"),
            ("empirical_upward_lifetime", "s"),
        ],
    );
    let mut totals = Vec::with_capacity(temps.len());
    for &t in &temps {
        let bath = PhononBathParams { coupling_density_product: chi_rho, temperature: t };
        let r = phonon_rates(&level, &bath)?;
        totals.push(r.total());
        rates.push(vec![
            t.into(),
            r.gamma_plus.into(),
            r.gamma_minus.into(),
            r.total().into(),
            (1.0 / r.total()).into(),
            linear_rate_approx(&level, &bath)?.into(),
            law.upward_lifetime(t).into(),
        ]);
    }
    let fit = line_fit(&temps, &totals).ok_or_else(|| Error::Fit("temperature grid is degenerate".into()))?;
    let t_cal = p.num("bath.calibration_temperature");
    let fitted_at_cal = fit.slope * t_cal + fit.intercept;

    let t_bath = p.num("bath.temperature");
    let bath_rates = phonon_rates(&level, &PhononBathParams { coupling_density_product: chi_rho, temperature: t_bath })?;
    let grid = TimeGrid::new(0.0, p.num("relaxation.duration"), p.count("relaxation.time_points") as usize)?;
    let mut trajectory = Table::new("trajectory", &[("time", "s"), ("lower", ""), ("upper", "")]);
    for pt in orbital_relaxation_trajectory(&bath_rates, Branch::Upper, &grid) {
        trajectory.push(vec![pt.time.into(), pt.lower.into(), pt.upper.into()]);
    }

    let summary = json!({
        "coupling_density_product": chi_rho,
        "orbital_splitting": orbital_splitting(&level),
        "linear_fit": {
            "slope": fit.slope,
            "intercept": fit.intercept,
            "r_squared": fit.r_squared,
            "relaxation_time_at_calibration": 1.0 / fitted_at_cal,
        },
        "calibration": {
            "temperature": t_cal,
            "target_relaxation_time": p.num("bath.calibration_time"),
        },
        "bath": {
            "temperature": t_bath,
            "gamma_plus": bath_rates.gamma_plus,
            "gamma_minus": bath_rates.gamma_minus,
            "relaxation_time": 1.0 / bath_rates.total(),
        },
        "empirical": {
            "upward_lifetime_1K": law.upward_lifetime(1.0),
            "upward_lifetime_260mK": law.upward_lifetime(0.26),
        },
    });
    Ok(Output { tables: vec![rates, trajectory], summary })
}

fn thermal(p: &Params) -> Result<Output> {
    let delta = orbital_splitting(&level(p));
    let temps = logspace(p.num("thermal.t_min"), p.num("thermal.t_max"), p.count("thermal.points"));
    let cold = p.num("thermal.polarized_below");
    let mut table = Table::new("line_ratio", &[("temperature", "K"), ("line_ratio", ""), ("lower_population", "")]);
    let mut ratios = Vec::with_capacity(temps.len());
    let mut worst_cold_polarization = f64::INFINITY;
    for &t in &temps {
        let r = thermal_line_ratio(delta, t);
        let lower = 1.0 / (1.0 + r);
        if t <= cold {
            worst_cold_polarization = worst_cold_polarization.min(lower);
        }
        ratios.push(r);
        table.push(vec![t.into(), r.into(), lower.into()]);
    }
    let fit = fit_delta_from_line_ratio(&temps, &ratios)?;
    let summary = json!({
        "delta": delta,
        "fit": {
            "delta": fit.delta,
            "delta_stderr": fit.delta_stderr,
            "relative_error": fit.delta / delta - 1.0,
            "r_squared": fit.fit.r_squared,
        },
        "polarized_below": cold,
        // Lower-branch population at the warmest grid point ≤ polarized_below.
        "min_lower_population_when_cold": if worst_cold_polarization.is_finite() { json!(worst_cold_polarization) } else { Json::Null },
    });
    Ok(Output { tables: vec![table], summary })
}

fn spectrum(p: &Params) -> Result<Output> {
    let sys = system(p);
    let center = p.optional("spectrum.center").unwrap_or(sys.cavity.resonance);
    let span = p.num("spectrum.span");
    let freqs = linspace(center - 0.5 * span, center + 0.5 * span, p.count("spectrum.points"));
    let mode = match p.optional("spectrum.drive_photons") {
        None => TransmissionMode::WeakDrive,
        Some(n) => TransmissionMode::Driven { amplitude: drive_for_photons(&sys.cavity, n) },
    };
    let spec = transmission_spectrum(&sys, &freqs, mode)?;
    let mut table = Table::new("transmission", &[("frequency", "Hz"), ("detuning", "Hz"), ("transmission", "")]);
    for pt in &spec {
        table.push(vec![pt.frequency.into(), (pt.frequency - center).into(), pt.transmission.into()]);
    }
    let dips: Vec<Json> = find_dips(&spec)
        .iter()
        .map(|d| json!({ "frequency": d.frequency, "detuning": d.frequency - center, "transmission": d.transmission }))
        .collect();
    let summary = json!({
        "center": center,
        "mode": if matches!(mode, TransmissionMode::WeakDrive) { "weak-drive" } else { "driven" },
        "cooperativity": sys.cooperativity().ok(),
        "emitters": sys.emitters.len(),
        "dips": dips,
    });
    Ok(Output { tables: vec![table], summary })
}

fn extinction_cmd(p: &Params) -> Result<Output> {
    let sys = system(p);
    let c = sys.cooperativity()?;
    let target = p.num("extinction.target");
    let (eta, fitted) = match p.optional("extinction.efficiency") {
        Some(eta) => (eta, false),
        None => (fit_extinction_efficiency(c, target)?, true),
    };
    let report = extinction(&sys, eta)?;
    let probe = sys.emitters[0].optical.zpl_frequency;
    let full = driven_steady_state(
        &sys,
        &DriveParams { frequency: probe, amplitude: drive_for_photons(&sys.cavity, WEAK_DRIVE_PHOTONS) },
    )?;
    let linear = linear_transmission_amplitude(&sys, probe).norm_sqr();

    let span = p.num("extinction.span");
    let mut table = Table::new(
        "dip",
        &[("detuning", "Hz"), ("linear_transmission", ""), ("detected_transmission", "")],
    );
    for f in linspace(probe - 0.5 * span, probe + 0.5 * span, p.count("extinction.points")) {
        let bare = linear_transmission_amplitude(&CoupledSystem { cavity: sys.cavity, emitters: vec![] }, f).norm_sqr();
        let t = linear_transmission_amplitude(&sys, f).norm_sqr() / bare;
        table.push(vec![(f - probe).into(), t.into(), (1.0 - eta * (1.0 - t)).into()]);
    }
    let summary = json!({
        "cooperativity": report.cooperativity,
        "ideal_transmission": report.ideal_transmission,
        "efficiency": report.fit_efficiency,
        "efficiency_fitted": fitted,
        "efficiency_target": if fitted { json!(target) } else { Json::Null },
        "extinction": report.extinction,
        "full_solver": {
            "transmission": full.transmission,
            "total_transmission": full.total_transmission,
            "fock_cutoff": full.fock_cutoff,
            "intracavity_photons": full.intracavity_photons,
        },
        "linear_transmission": linear,
        "linear_vs_full_abs_diff": (linear - full.transmission).abs(),
    });
    Ok(Output { tables: vec![table], summary })
}

fn saturation(p: &Params) -> Result<Output> {
    let sys = system(p);
    let photons = p.nums("saturation.photons");
    let amps: Vec<f64> = photons.iter().map(|&n| drive_for_photons(&sys.cavity, n)).collect();
    let curve = saturation_curve(&sys, &amps)?;
    let mut table = Table::new(
        "saturation",
        &[
            ("bare_photons", ""),
            ("drive_amplitude", "Hz"),
            ("transmission", ""),
            ("total_transmission", ""),
            ("dip_depth", ""),
            ("linewidth", "Hz"),
            ("intracavity_photons", ""),
            ("emitter_excitation", ""),
        ],
    );
    for (n, pt) in photons.iter().zip(&curve) {
        table.push(vec![
            (*n).into(),
            pt.amplitude.into(),
            pt.transmission.into(),
            pt.total_transmission.into(),
            pt.dip_depth.into(),
            pt.linewidth.into(),
            pt.intracavity_photons.into(),
            pt.emitter_excitation.into(),
        ]);
    }
    let (first, last) = (curve.first(), curve.last());
    let half = if p.flag("saturation.half_saturation") { Some(half_saturation(&sys)?) } else { None };
    let summary = json!({
        "cooperativity": sys.cooperativity().ok(),
        "weakest": first.map(to_json),
        "strongest": last.map(to_json),
        "depth_ratio": match (first, last) {
            (Some(a), Some(b)) if a.dip_depth > 0.0 => json!(b.dip_depth / a.dip_depth),
            _ => Json::Null,
        },
        "half_saturation": half.as_ref().map(to_json),
    });
    Ok(Output { tables: vec![table], summary })
}

fn g2(p: &Params) -> Result<Output> {
    let sys = system(p);
    let drive = DriveParams {
        frequency: sys.emitters[0].optical.zpl_frequency + p.num("g2.detuning"),
        amplitude: drive_for_photons(&sys.cavity, p.num("g2.photons")),
    };
    let grid = TimeGrid::new(0.0, p.num("g2.tau_max"), p.count("g2.points") as usize)?;
    let transmitted = photon_statistics(&sys, &drive, Port::Transmitted, &grid)?;
    let scattered = photon_statistics(&sys, &drive, Port::Scattered, &grid)?;
    let mut table = Table::new("g2", &[("tau", "s"), ("transmitted", ""), ("scattered", "")]);
    for ((t, a), b) in grid.points().into_iter().zip(&transmitted).zip(&scattered) {
        table.push(vec![t.into(), (*a).into(), (*b).into()]);
    }
    let port = |v: &[f64]| json!({ "g2_zero": v[0], "g2_tail": v[v.len() - 1] });
    let summary = json!({
        "cooperativity": sys.cooperativity().ok(),
        "bare_photons": p.num("g2.photons"),
        "drive": to_json(&drive),
        "tail_delay": grid.stop,
        "transmitted": port(&transmitted),
        "scattered": port(&scattered),
    });
    Ok(Output { tables: vec![table], summary })
}

fn hom(p: &Params) -> Result<Output> {
    let lifetime = p.num("hom.lifetime");
    let base = SinglePhotonSource {
        frequency: p.num("emitter.zpl_frequency"),
        linewidth: p.num("hom.linewidth_1"),
        lifetime,
        polarization_angle: 0.0,
        emission_rate: p.num("hom.emission_rate"),
        background_fraction: p.num("hom.background"),
    };
    let second = SinglePhotonSource {
        frequency: base.frequency + p.num("hom.detuning"),
        linewidth: p.num("hom.linewidth_2"),
        ..base
    };

    let ideal_source = SinglePhotonSource { linewidth: 1.0 / (2.0 * PI * lifetime), background_fraction: 0.0, ..base };
    let ideal_perp = SinglePhotonSource { polarization_angle: 0.5 * PI, ..ideal_source };
    let ideal = DetectorModel::ideal();
    let ideal_parallel = hom_g2(&ideal_source, &ideal_source, &ideal, &[0.0])?.g2[0];
    let ideal_perpendicular = hom_g2(&ideal_source, &ideal_perp, &ideal, &[0.0])?.g2[0];

    let (s1, s2, detector, fit) = if p.flag("hom.fit") {
        let targets = HomTargets {
            parallel: p.num("hom.target_parallel"),
            parallel_err: p.num("hom.target_parallel_err"),
            perpendicular: p.num("hom.target_perpendicular"),
            perpendicular_err: p.num("hom.target_perpendicular_err"),
        };
        let fit = fit_hom_imperfections(&base, &second, &targets, p.num("hom.sigma_max"))?;
        let detector = DetectorModel { timing_jitter_sigma: fit.jitter_sigma, ..DetectorModel::ideal() };
        let with_bg = |s: &SinglePhotonSource| SinglePhotonSource { background_fraction: fit.background_fraction, ..*s };
        (with_bg(&base), with_bg(&second), detector, Some(fit))
    } else {
        let detector = DetectorModel {
            timing_jitter_sigma: p.num("hom.jitter"),
            dark_rate: p.num("hom.dark_rate"),
            coincidence_bin: p.num("hom.bin"),
        };
        (base, second, detector, None)
    };
    let perp = SinglePhotonSource { polarization_angle: s1.polarization_angle + 0.5 * PI, ..s2 };
    let taus = symmetric_delays(p.num("hom.tau_max"), p.count("hom.points"));
    let parallel = hom_g2(&s1, &s2, &detector, &taus)?;
    let perpendicular = hom_g2(&s1, &perp, &detector, &taus)?;

    let mut table = Table::new(
        "hom",
        &[("tau", "s"), ("g2_parallel", ""), ("g2_perpendicular", ""), ("interference_parallel", "")],
    );
    for (k, &tau) in taus.iter().enumerate() {
        table.push(vec![
            tau.into(),
            parallel.g2[k].into(),
            perpendicular.g2[k].into(),
            parallel.interference[k].into(),
        ]);
    }
    let g_par = parallel.at_zero().expect("delay grid contains zero");
    let g_perp = perpendicular.at_zero().expect("delay grid contains zero");
    let summary = json!({
        "ideal": { "parallel": ideal_parallel, "perpendicular": ideal_perpendicular },
        "fit": fit.as_ref().map(to_json),
        "detector": to_json(&detector),
        "background_fraction": s1.background_fraction,
        "g2_parallel_zero": g_par,
        "g2_perpendicular_zero": g_perp,
        "visibility": hom_visibility(g_par, g_perp).ok(),
        "beat_period": parallel.beat_period(),
        "detuning": s2.frequency - s1.frequency,
    });
    Ok(Output { tables: vec![table], summary })
}

fn raman(p: &Params) -> Result<Output> {
    let optical = emitter(p);
    let mut table = Table::new(
        "lines",
        &[
            ("drive_detuning", "Hz"),
            ("s_center", "Hz"),
            ("s_width", "Hz"),
            ("s_weight", ""),
            ("r_center", "Hz"),
            ("r_width", "Hz"),
            ("r_weight", ""),
            ("r_offset", "Hz"),
            ("within_tuning_range", ""),
        ],
    );
    let mut worst_position_error: f64 = 0.0;
    let mut in_range = 0u64;
    for &delta in p.nums("raman.detunings") {
        let cfg = RamanConfig {
            drive_detuning: delta,
            transition_frequency: optical.zpl_frequency,
            control_phase: p.num("raman.control_phase"),
            drive_rabi: p.num("raman.drive_rabi"),
        };
        let spec = raman_spectrum(&cfg, &optical)?;
        let [s, r] = spec.lines;
        worst_position_error = worst_position_error.max((r.center - (optical.zpl_frequency - delta)).abs());
        in_range += spec.within_tuning_range as u64;
        table.push(vec![
            delta.into(),
            s.center.into(),
            s.width.into(),
            s.weight.into(),
            r.center.into(),
            r.width.into(),
            r.weight.into(),
            (r.center - optical.zpl_frequency).into(),
            spec.within_tuning_range.into(),
        ]);
    }
    let summary = json!({
        "transition_frequency": optical.zpl_frequency,
        "tuning_range": RAMAN_TUNING_RANGE,
        "detunings": p.nums("raman.detunings").len(),
        "within_tuning_range": in_range,
        "max_line_position_error": worst_position_error,
    });
    Ok(Output { tables: vec![table], summary })
}

fn superradiance(p: &Params) -> Result<Output> {
    let lifetime = p.num("waveguide.lifetime");
    let zpl = p.num("emitter.zpl_frequency");
    let source = SinglePhotonSource {
        frequency: zpl,
        linewidth: 1.0 / (2.0 * PI * lifetime),
        lifetime,
        polarization_angle: 0.0,
        emission_rate: p.num("hom.emission_rate"),
        background_fraction: 0.0,
    };
    let first = RamanConfig {
        drive_detuning: p.num("waveguide.raman_detuning"),
        transition_frequency: zpl,
        control_phase: 0.0,
        drive_rabi: p.num("waveguide.drive_rabi"),
    };
    let second = RamanConfig { transition_frequency: zpl + p.num("waveguide.split"), ..first };
    let c = p.nums("waveguide.couplings");
    let untuned = TwoEmitterWaveguide {
        sources: [source, source],
        raman: [first, second],
        relative_phase: p.num("waveguide.relative_phase"),
        tuned: false,
        couplings: [c[0], c[1]],
    };
    let ratio = superradiant_rate(&untuned.tuned_copy())?;
    let cal = calibrate_waveguide(
        &untuned,
        p.num("waveguide.single_target"),
        p.num("waveguide.untuned_target"),
        p.num("waveguide.sigma_max"),
    )?;
    let detector = DetectorModel { timing_jitter_sigma: cal.jitter_sigma, ..DetectorModel::ideal() };
    let mut calibrated = untuned;
    for s in calibrated.sources.iter_mut() {
        s.background_fraction = cal.background_fraction;
    }
    let taus = symmetric_delays(p.num("waveguide.tau_max"), p.count("waveguide.points"));
    let single = single_emitter_g2(&calibrated.sources[0], &detector, &taus)?;
    let g_untuned = waveguide_g2(&calibrated, &detector, &taus)?;
    let g_tuned = waveguide_g2(&calibrated.tuned_copy(), &detector, &taus)?;
    let mut table = Table::new("waveguide_g2", &[("tau", "s"), ("single", ""), ("untuned", ""), ("tuned", "")]);
    for k in 0..taus.len() {
        table.push(vec![taus[k].into(), single[k].into(), g_untuned[k].into(), g_tuned[k].into()]);
    }
    let [f1, f2] = untuned.emission_frequencies();
    let summary = json!({
        "superradiant_ratio": ratio,
        "relative_phase": untuned.relative_phase,
        "couplings": c,
        "raman_line_separation": f2 - f1,
        "calibration": to_json(&cal),
    });
    Ok(Output { tables: vec![table], summary })
}

fn curve_rows(table: &mut Table, n: u32, result: &CoherenceResult) {
    for pt in &result.decay_curve {
        table.push(vec![(n as u64).into(), pt.tau.into(), pt.coherence.into(), pt.fringe.into(), pt.stderr.into()]);
    }
}

fn spin(p: &Params, seeds: &Seeds) -> Result<Output> {
    let psd = p.noise();
    psd.validate()?;
    let t1 = match (p.optional("spin.t1"), p.optional("spin.t1_temperature")) {
        (Some(t1), _) => Some(t1),
        (None, Some(temp)) => Some(empirical_law(p).upward_lifetime(temp)),
        (None, None) => None,
    };
    let points = p.count("spin.curve_points");
    let span = p.num("spin.curve_span");
    let grid = |t2: f64| -> Result<Vec<f64>> {
        if !t2.is_finite() {
            return Err(Error::Fit("coherence never decays to 1/e under this noise; no decay curve to sample".into()));
        }
        Ok((1..=points).map(|k| span * t2 * k as f64 / points as f64).collect())
    };
    let trajectories = p.count("spin.trajectories") as usize;
    let columns = [("pulses", ""), ("tau", "s"), ("coherence", ""), ("fringe", ""), ("stderr", "")];
    let mut curves = Table::new("curves", &columns);
    let mut mc_curves = Table::new("mc_curves", &columns);
    let mut t2_table = Table::new(
        "t2",
        &[("pulses", ""), ("t2_exact", "s"), ("t2_fit", "s"), ("stretch", ""), ("t2_mc", "s"), ("stretch_mc", "")],
    );

    if p.text("spin.sequence") == "ramsey" {
        let t2x = filter_t2(&psd, &SequenceKind::Ramsey, t1)?;
        let taus = grid(t2x)?;
        let res = ramsey_decay(&psd, p.num("spin.detuning"), &taus, t1)?;
        curve_rows(&mut curves, 0, &res);
        let mc = if trajectories > 0 {
            let mc = monte_carlo_coherence(&psd, SequenceKind::Ramsey, &taus, trajectories, seeds.stream("ramsey"), t1)?;
            curve_rows(&mut mc_curves, 0, &mc);
            Some(mc)
        } else {
            None
        };
        t2_table.push(vec![
            0u64.into(),
            t2x.into(),
            res.t2.into(),
            res.stretch.into(),
            mc.as_ref().map(|m| m.t2).into(),
            mc.as_ref().map(|m| m.stretch).into(),
        ]);
        let static_sigma = psd.static_variance().sqrt();
        let summary = json!({
            "sequence": "ramsey",
            "noise": to_json(&psd),
            "t1": t1,
            "ramsey": {
                "t2_exact": t2x,
                "t2": res.t2,
                "stretch": res.stretch,
                "quasi_static_t2_star": if static_sigma > 0.0 { json!(2f64.sqrt() / static_sigma) } else { Json::Null },
                "t2_over_quasi_static": if static_sigma > 0.0 { json!(res.t2 * static_sigma / 2f64.sqrt()) } else { Json::Null },
            },
            "monte_carlo": mc.as_ref().map(|m| json!({
                "trajectories": trajectories,
                "t2": m.t2,
                "relative_deviation": m.t2 / res.t2 - 1.0,
            })),
        });
        let mut tables = vec![curves, t2_table];
        if mc.is_some() {
            tables.push(mc_curves);
        }
        return Ok(Output { tables, summary });
    }

    let orders: Vec<u32> = p.counts("spin.orders").iter().map(|&n| n as u32).collect();
    let mc_orders: Vec<u32> = match p.counts("spin.mc_orders") {
        [] => orders.clone(),
        some => some.iter().map(|&n| n as u32).collect(),
    };
    let mut exact = Vec::with_capacity(orders.len());
    let mut per_order = serde_json::Map::new();
    let mut mc_entries = Vec::new();
    let mut worst_mc: f64 = 0.0;
    for &n in &orders {
        let t2x = filter_t2(&psd, &SequenceKind::Cpmg { n }, t1)?;
        let taus = grid(t2x)?;
        let res = cpmg_coherence(&psd, n, &taus, t1)?;
        curve_rows(&mut curves, n, &res);
        let mc = if trajectories > 0 && mc_orders.contains(&n) {
            let mc = monte_carlo_coherence(
                &psd,
                SequenceKind::Cpmg { n },
                &taus,
                trajectories,
                seeds.stream(&format!("cpmg-{n}")),
                t1,
            )?;
            curve_rows(&mut mc_curves, n, &mc);
            let dev = mc.t2 / res.t2 - 1.0;
            worst_mc = worst_mc.max(dev.abs());
            mc_entries.push(json!({ "pulses": n, "t2_filter": res.t2, "t2_mc": mc.t2, "relative_deviation": dev }));
            Some(mc)
        } else {
            None
        };
        t2_table.push(vec![
            (n as u64).into(),
            t2x.into(),
            res.t2.into(),
            res.stretch.into(),
            mc.as_ref().map(|m| m.t2).into(),
            mc.as_ref().map(|m| m.stretch).into(),
        ]);
        per_order.insert(n.to_string(), json!(t2x));
        exact.push((n, t2x));
    }
    let scaling = if exact.len() >= 2 { Some(t2_scaling_fit(&exact)?) } else { None };
    let summary = json!({
        "sequence": "cpmg",
        "noise": to_json(&psd),
        "t1": t1,
        "t2_by_order": per_order,
        "scaling": scaling.as_ref().map(|s| json!({
            "beta": s.beta,
            "beta_stderr": s.beta_stderr,
            "prefactor": s.prefactor,
            "curvature": s.curvature,
            "curvature_stderr": s.curvature_stderr,
            "curvature_warning": s.curvature_warning,
            "r_squared": s.fit.r_squared,
        })),
        "monte_carlo": if mc_entries.is_empty() { Json::Null } else { json!({
            "trajectories": trajectories,
            "orders": mc_entries,
            "max_relative_deviation": worst_mc,
        }) },
    });
    let mut tables = vec![curves, t2_table];
    if !mc_entries.is_empty() {
        tables.push(mc_curves);
    }
    Ok(Output { tables, summary })
}

/// Adds scenario context to a core error.
pub fn describe_error(command: Command, point: usize, assignments: &[(String, f64)], err: &Error) -> String {
    let at = if assignments.is_empty() {
        String::new()
    } else {
        let parts: Vec<String> = assignments.iter().map(|(k, v)| format!("{k} = {v}")).collect();
        format!(" at sweep point {point} ({})", parts.join(", "))
    };
    format!("{command}{at}: {err}")
}
