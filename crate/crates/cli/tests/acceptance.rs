//! End-to-end acceptance checks. Each criterion runs the shipped pipeline on
//! a bundled scenario and compares the result with an oracle written out
//! here, independently of the library code. Prints one PASS/FAIL line per
//! criterion and exits non-zero if any fails.

use std::f64::consts::PI;
use std::time::Instant;

use nalgebra::Matrix4;
use num_complex::Complex64;
use serde_json::Value;
use sivsim_cli::acceptance::bundled_scenario;
use sivsim_cli::commands::{run, Command, Seeds};
use sivsim_cli::parse_scenario_str;
use sivsim_core::cavity::{driven_steady_state, CavityParams, CoupledSystem, DriveParams};
use sivsim_core::interference::{hom_g2, superradiant_rate, DetectorModel, SinglePhotonSource, TwoEmitterWaveguide};
use sivsim_core::qdyn::{
    evolve_master, ops, stationarity_residual, steady_state, tensor_product, Channel, DensityMatrix, HilbertSpace,
    LindbladModel, Operator, TimeGrid,
};
use sivsim_core::spin::{filter_t2, monte_carlo_coherence, noise_preset, ramsey_decay, NoisePsd, SequenceKind};

const PLANCK: f64 = 6.626_070_15e-34;
const BOLTZMANN: f64 = 1.380_649e-23;

// Pinned tolerances.
const R2_MIN: f64 = 0.999;
const LIFETIME_REL_TOL: f64 = 0.05;
const POLARIZATION_MIN: f64 = 0.99;
const DELTA_REL_TOL: f64 = 0.01;
const COOPERATIVITY_ARITH_TOL: f64 = 0.005;
const COOPERATIVITY_QUOTED: (f64, f64) = (1.0, 0.1);
const LINEAR_VS_FULL_TOL: f64 = 1e-4;
const EXTINCTION_TARGET: (f64, f64) = (0.38, 0.05);
const EFFICIENCY_EXPECTED: (f64, f64) = (0.50, 0.05);
const G2_SCATTERED_MAX: f64 = 0.5;
const G2_TRANSMITTED_MIN: f64 = 1.5;
const G2_TAIL_TOL: f64 = 2e-3;
const HOM_IDEAL_TOL: f64 = 1e-6;
const HOM_PARALLEL: (f64, f64) = (0.26, 0.05);
const HOM_PERPENDICULAR: (f64, f64) = (0.66, 0.08);
const HOM_BEAT: (f64, f64) = (19.2e-9, 0.5e-9);
const SUPERRADIANT_TOL: f64 = 1e-6;
const WG_SINGLE: (f64, f64) = (0.16, 1e-3);
const WG_UNTUNED: (f64, f64) = (0.63, 0.03);
const WG_TUNED: (f64, f64) = (0.98, 0.05);
const RAMSEY_REL_TOL: f64 = 0.01;
const MC_REL_TOL: f64 = 0.05;
const SLOW_BATH_BETA: (f64, f64) = (0.667, 0.05);
const LINEAR_BETA: (f64, f64) = (0.97, 1.07);
const T2_32: (f64, f64) = (13e-3, 2e-3);
const TIME_DOMAIN_REL_TOL: f64 = 1e-3;
const TRACE_DRIFT_MAX: f64 = 1e-8;
const POSITIVITY_MIN: f64 = -1e-8;
const RESIDUAL_MAX: f64 = 1e-9;
const CAVITY_PHOTON_REL_TOL: f64 = 1e-6;

/// Collects named sub-checks for one criterion.
struct Criterion {
    failures: Vec<String>,
    notes: Vec<String>,
}

impl Criterion {
    fn new() -> Self {
        Self { failures: Vec::new(), notes: Vec::new() }
    }

    fn check(&mut self, label: &str, ok: bool, detail: String) {
        if ok {
            self.notes.push(format!("{label}: {detail}"));
        } else {
            self.failures.push(format!("{label}: {detail}"));
        }
    }

    fn within(&mut self, label: &str, x: f64, (target, tol): (f64, f64)) {
        self.check(label, (x - target).abs() <= tol, format!("{x:.6} vs {target} ± {tol}"));
    }

    fn between(&mut self, label: &str, x: f64, lo: f64, hi: f64) {
        self.check(label, x >= lo && x <= hi, format!("{x:.6e} in [{lo:e}, {hi:e}]"));
    }
}

fn pipeline(command: Command, scenario: &str) -> Value {
    let s = parse_scenario_str(bundled_scenario(scenario).expect("bundled scenario"), None).expect("scenario parses");
    let out = run(command, &s.params, &Seeds::new(&s.hash(), s.seed, 0)).expect("pipeline runs");
    out.summary
}

fn num(v: &Value, pointer: &str) -> f64 {
    v.pointer(pointer).and_then(Value::as_f64).unwrap_or_else(|| panic!("summary lacks {pointer}"))
}

fn kelvin(delta_hz: f64) -> f64 {
    PLANCK * delta_hz / BOLTZMANN
}

/// Ordinary least squares: (slope, intercept, R²).
fn ols(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx, sxy * sxy / (sxx * syy))
}

fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let flo = f(lo);
    assert!(flo * f(hi) < 0.0, "root not bracketed");
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if (f(mid) < 0.0) == (flo < 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn criterion_1() -> Criterion {
    let mut c = Criterion::new();
    let s = pipeline(Command::Relaxation, "relaxation");
    // Single-phonon rates scale as coth(hΔ/2kT); calibrate at 5 K, 45 GHz.
    let th = kelvin(45e9);
    let total = |t: f64| (1.0 / 39e-9) * (th / (2.0 * t)).tanh().recip() * (th / (2.0 * 5.0)).tanh();
    let temps: Vec<f64> = (0..36).map(|k| 4.5 + 17.5 * k as f64 / 35.0).collect();
    let rates: Vec<f64> = temps.iter().map(|&t| total(t)).collect();
    let (_, _, r2) = ols(&temps, &rates);
    c.check("oracle curve linear over 4.5-22 K", r2 > R2_MIN, format!("R² = {r2:.7}"));
    let r2_pipe = num(&s, "/linear_fit/r_squared");
    c.check("pipeline curve linear", r2_pipe > R2_MIN, format!("R² = {r2_pipe:.7}"));
    c.check(
        "pipeline slope matches oracle",
        (num(&s, "/linear_fit/slope") / ols(&temps, &rates).0 - 1.0).abs() < 1e-6,
        format!("{:.6e}", num(&s, "/linear_fit/slope")),
    );
    c.within("1/(γ₊+γ₋) at 5 K [ns]", num(&s, "/bath/relaxation_time") * 1e9, (39.0, 1e-6));
    // Empirical law: 1/γ₊ = 200 ns (exp(2.4 K / T) - 1).
    let law = |t: f64| 200e-9 * ((2.4 / t).exp() - 1.0);
    for (ptr, t, target) in [("/empirical/upward_lifetime_1K", 1.0, 2.0e-6), ("/empirical/upward_lifetime_260mK", 0.26, 2.0e-3)] {
        let v = num(&s, ptr);
        c.check(&format!("1/γ₊ at {t} K equals law"), (v / law(t) - 1.0).abs() < 1e-12, format!("{v:.4e}"));
        c.within(&format!("1/γ₊ at {t} K / target"), v / target, (1.0, LIFETIME_REL_TOL));
    }
    c
}

fn criterion_2() -> Criterion {
    let mut c = Criterion::new();
    let s = pipeline(Command::Thermal, "thermal");
    let th = kelvin(48e9);
    let temps: Vec<f64> = (0..41).map(|k| 10f64.powf(-1.0 + 2.0 * k as f64 / 40.0)).collect();
    let lower_min = temps.iter().filter(|&&t| t <= 0.5).map(|&t| 1.0 / (1.0 + (-th / t).exp())).fold(1.0, f64::min);
    c.check("oracle polarization at T ≤ 0.5 K", lower_min > POLARIZATION_MIN, format!("{lower_min:.5}"));
    let pipe = num(&s, "/min_lower_population_when_cold");
    c.check("pipeline polarization at T ≤ 0.5 K", pipe > POLARIZATION_MIN, format!("{pipe:.5}"));
    c.check("pipeline matches oracle", (pipe - lower_min).abs() < 1e-12, format!("{:.2e}", (pipe - lower_min).abs()));
    let x: Vec<f64> = temps.iter().map(|t| 1.0 / t).collect();
    let y: Vec<f64> = temps.iter().map(|&t| -th / t).collect();
    let oracle_delta = -ols(&x, &y).0 * BOLTZMANN / PLANCK;
    let fitted = num(&s, "/fit/delta");
    c.within("fitted Δ / 48 GHz", fitted / 48e9, (1.0, DELTA_REL_TOL));
    c.check("fit agrees with oracle fit", (fitted / oracle_delta - 1.0).abs() < 1e-9, format!("{:.6} GHz", fitted / 1e9));
    c
}

fn criterion_3() -> Criterion {
    let mut c = Criterion::new();
    let s = pipeline(Command::Extinction, "extinction");
    let oracle = 4.0 * 2.1f64.powi(2) / (57.0 * 0.30);
    let pipe = num(&s, "/cooperativity");
    c.check("4g²/(κγ) from {2.1, 57, 0.30} GHz", (pipe - oracle).abs() < 1e-9, format!("{pipe:.5} vs {oracle:.5}"));
    c.within("C rounds to 1.03", pipe, (1.03, COOPERATIVITY_ARITH_TOL));
    c.within("C within quoted 1.0(1)", pipe, COOPERATIVITY_QUOTED);
    c
}

fn criterion_4() -> Criterion {
    let mut c = Criterion::new();
    let s = pipeline(Command::Extinction, "extinction");
    let coop = num(&s, "/cooperativity");
    let ideal = 1.0 / (1.0 + coop).powi(2);
    let full = num(&s, "/full_solver/transmission");
    c.check("1/(1+C)² vs master equation", (full - ideal).abs() < LINEAR_VS_FULL_TOL, format!("|Δ| = {:.2e}", (full - ideal).abs()));
    c.check(
        "pipeline linear response is 1/(1+C)²",
        (num(&s, "/linear_transmission") - ideal).abs() < 1e-12,
        format!("{:.6}", num(&s, "/linear_transmission")),
    );
    let eta = num(&s, "/efficiency");
    let eta_oracle = EXTINCTION_TARGET.0 / (1.0 - ideal);
    c.check("efficiency reported and equals closed form", (eta - eta_oracle).abs() < 1e-9, format!("η = {eta:.4}"));
    c.within("η ≈ 0.50", eta, EFFICIENCY_EXPECTED);
    c.within("ΔT/T", num(&s, "/extinction"), EXTINCTION_TARGET);
    c
}

fn criterion_5() -> Criterion {
    let mut c = Criterion::new();
    let s = pipeline(Command::G2, "g2");
    c.within("C ≈ 1", num(&s, "/cooperativity"), COOPERATIVITY_QUOTED);
    let scat = num(&s, "/scattered/g2_zero");
    let trans = num(&s, "/transmitted/g2_zero");
    c.check("scattered g²(0) < 0.5", scat < G2_SCATTERED_MAX, format!("{scat:.4}"));
    // One two-level emitter cannot emit two photons at once: σσ = 0.
    c.check("scattered g²(0) is zero for one emitter", scat.abs() < 1e-9, format!("{scat:.2e}"));
    c.check("transmitted g²(0) > 1.5", trans > G2_TRANSMITTED_MIN, format!("{trans:.4}"));
    c.within("transmitted g²(∞)", num(&s, "/transmitted/g2_tail"), (1.0, G2_TAIL_TOL));
    c.within("scattered g²(∞)", num(&s, "/scattered/g2_tail"), (1.0, G2_TAIL_TOL));
    c
}

fn criterion_6() -> Criterion {
    let mut c = Criterion::new();
    let s = pipeline(Command::Hom, "hom");
    // Indistinguishable photons never coincide; distinguishable ones give 1/2.
    c.within("ideal g²∥(0)", num(&s, "/ideal/parallel"), (0.0, HOM_IDEAL_TOL));
    c.within("ideal g²⊥(0)", num(&s, "/ideal/perpendicular"), (0.5, HOM_IDEAL_TOL));
    c.within("fitted g²∥(0)", num(&s, "/g2_parallel_zero"), HOM_PARALLEL);
    c.within("fitted g²⊥(0)", num(&s, "/g2_perpendicular_zero"), HOM_PERPENDICULAR);
    c.notes.push(format!(
        "fit: jitter σ = {:.3e} s, background = {:.4}",
        num(&s, "/fit/jitter_sigma"),
        num(&s, "/fit/background_fraction")
    ));

    // Beat period read off the zero crossings of the interference term.
    let src = SinglePhotonSource {
        frequency: 406.7e12,
        linewidth: 135e6,
        lifetime: 1.73e-9,
        polarization_angle: 0.0,
        emission_rate: 1e5,
        background_fraction: 0.0,
    };
    let other = SinglePhotonSource { frequency: src.frequency + 52e6, linewidth: 136e6, ..src };
    let taus: Vec<f64> = (1..4000).map(|k| k as f64 * 10e-12).collect();
    let curve = hom_g2(&src, &other, &DetectorModel::ideal(), &taus).expect("hom curve");
    let crossings: Vec<f64> = curve
        .interference
        .windows(2)
        .zip(taus.windows(2))
        .filter(|(y, _)| y[0] * y[1] < 0.0)
        .map(|(y, t)| t[0] + (t[1] - t[0]) * y[0] / (y[0] - y[1]))
        .collect();
    c.check("beat visible", crossings.len() >= 3, format!("{} zero crossings", crossings.len()));
    if crossings.len() >= 3 {
        let spacing = (crossings[crossings.len() - 1] - crossings[0]) / (crossings.len() - 1) as f64;
        c.within("beat period from curve [ns]", 2.0 * spacing * 1e9, (HOM_BEAT.0 * 1e9, HOM_BEAT.1 * 1e9));
    }
    c.within("pipeline beat period [ns]", num(&s, "/beat_period") * 1e9, (HOM_BEAT.0 * 1e9, HOM_BEAT.1 * 1e9));
    c
}

/// Excited population after evolving `psi` under `dρ/dt = Γ D[L]ρ` with RK4.
fn excitation_after(l: &Matrix4<Complex64>, psi: [Complex64; 4], number: &Matrix4<Complex64>, gamma_t: f64) -> f64 {
    let v = nalgebra::Vector4::from(psi);
    let mut rho = v * v.adjoint();
    let ld = l.adjoint();
    let ldl = ld * l;
    let half = Complex64::new(0.5, 0.0);
    let rhs = |r: &Matrix4<Complex64>| l * r * ld - (ldl * r + r * ldl) * half;
    let steps = 20_000;
    let h = Complex64::new(gamma_t / steps as f64, 0.0);
    for _ in 0..steps {
        let k1 = rhs(&rho);
        let k2 = rhs(&(rho + k1 * h * half));
        let k3 = rhs(&(rho + k2 * h * half));
        let k4 = rhs(&(rho + k3 * h));
        rho += (k1 + k2 * Complex64::new(2.0, 0.0) + k3 * Complex64::new(2.0, 0.0) + k4) * (h / 6.0);
    }
    (number * rho).trace().re
}

fn criterion_7() -> Criterion {
    let mut c = Criterion::new();
    // Two-emitter master-equation oracle, basis |g⟩ = 0, |e⟩ = 1 per emitter.
    let z = Complex64::new(0.0, 0.0);
    let o = Complex64::new(1.0, 0.0);
    let sm = nalgebra::Matrix2::new(z, o, z, z);
    let id = nalgebra::Matrix2::identity();
    let kron = |a: &nalgebra::Matrix2<Complex64>, b: &nalgebra::Matrix2<Complex64>| -> Matrix4<Complex64> {
        Matrix4::from_fn(|i, j| a[(i / 2, j / 2)] * b[(i % 2, j % 2)])
    };
    let s1 = kron(&sm, &id);
    let s2 = kron(&id, &sm);
    let number = s1.adjoint() * s1 + s2.adjoint() * s2;
    let r = Complex64::new(0.5f64.sqrt(), 0.0);
    // |eg⟩ is index 2, |ge⟩ index 1.
    let bright = [z, r, r, z];
    let single = [z, z, o, z];
    let gt = 0.5;
    let collective = -excitation_after(&(s1 + s2), bright, &number, gt).ln() / gt;
    let alone = -excitation_after(&s1, single, &number, gt).ln() / gt;
    let oracle = collective / alone;
    c.within("master-equation |B⟩ rate ratio", oracle, (2.0, SUPERRADIANT_TOL));

    let s = pipeline(Command::Superradiance, "superradiance");
    let pipe = num(&s, "/superradiant_ratio");
    c.within("pipeline ratio", pipe, (2.0, SUPERRADIANT_TOL));
    c.check("pipeline matches oracle", (pipe - oracle).abs() < SUPERRADIANT_TOL, format!("|Δ| = {:.1e}", (pipe - oracle).abs()));

    // Unequal couplings: |B⟩ emits at Γ|c₁ + c₂|²/2, single emitters at Γc².
    let src = SinglePhotonSource {
        frequency: 406.7e12,
        linewidth: 92e6,
        lifetime: 1.73e-9,
        polarization_angle: 0.0,
        emission_rate: 1e5,
        background_fraction: 0.0,
    };
    let cfg = sivsim_core::interference::RamanConfig {
        drive_detuning: 2e9,
        transition_frequency: 406.7e12,
        control_phase: 0.0,
        drive_rabi: 0.3e9,
    };
    let wg = TwoEmitterWaveguide { sources: [src, src], raman: [cfg, cfg], relative_phase: 0.0, tuned: true, couplings: [1.0, 0.6] };
    let expected = 0.5 * 1.6f64.powi(2) / (0.5 * (1.0 + 0.36));
    let got = superradiant_rate(&wg).expect("rate");
    c.within("unequal couplings", got, (expected, 1e-12));

    c.within("single-emitter g²(0) calibration", num(&s, "/calibration/g2_single"), WG_SINGLE);
    c.within("untuned pair g²(0)", num(&s, "/calibration/g2_untuned"), WG_UNTUNED);
    c.within("tuned pair g²(0)", num(&s, "/calibration/g2_tuned"), WG_TUNED);
    c.notes.push(format!(
        "calibration: jitter σ = {:.3e} s, background = {:.4}",
        num(&s, "/calibration/jitter_sigma"),
        num(&s, "/calibration/background_fraction")
    ));
    c
}

/// `G(x) = ∫₀^x (x − s) K(s) ds` for a correlation kernel K.
trait Kernel {
    fn g(&self, x: f64) -> f64;
}

/// OU kernel σ² e^{−|s|/τ}, with the σ²x²/2 part dropped: it cancels for
/// any zero-area filter and would otherwise swamp the result.
struct OuKernel {
    sigma: f64,
    tau_c: f64,
}

impl Kernel for OuKernel {
    fn g(&self, x: f64) -> f64 {
        let u = x.abs() / self.tau_c;
        let tail = if u < 0.1 {
            // e^{−u} − 1 + u − u²/2
            let mut term = -u * u * u / 6.0;
            let mut sum = 0.0;
            for k in 4..30 {
                sum += term;
                term *= -u / k as f64;
            }
            sum
        } else {
            (-u).exp() - 1.0 + u - 0.5 * u * u
        };
        self.sigma * self.sigma * self.tau_c * self.tau_c * tail
    }
}

/// Band-limited white kernel `(A/π) sin(ω_c s)/s`.
struct WhiteKernel {
    amplitude: f64,
    cutoff: f64,
}

fn sine_integral(z: f64) -> f64 {
    let z = z.abs();
    if z <= 20.0 {
        let mut term = z;
        let mut sum: f64 = 0.0;
        let mut k = 0;
        while term.abs() > 1e-18 * sum.abs().max(1e-300) || k < 3 {
            sum += term / (2 * k + 1) as f64;
            k += 1;
            term *= -z * z / ((2 * k) as f64 * (2 * k + 1) as f64);
        }
        sum
    } else {
        // Si(z) = π/2 − f(z) cos z − g(z) sin z, asymptotic series.
        let (mut f, mut g) = (0.0, 0.0);
        let mut term = 1.0 / z;
        for k in 0..20 {
            if k % 2 == 0 {
                f += if (k / 2) % 2 == 0 { term } else { -term };
            } else {
                g += if (k / 2) % 2 == 0 { term } else { -term };
            }
            term *= (k + 1) as f64 / z;
        }
        PI / 2.0 - f * z.cos() - g * z.sin()
    }
}

impl Kernel for WhiteKernel {
    fn g(&self, x: f64) -> f64 {
        let w = self.cutoff;
        let x = x.abs();
        self.amplitude / PI * (x * sine_integral(w * x) - (1.0 - (w * x).cos()) / w)
    }
}

/// Decay exponent of CPMG-N at total time T from the time-domain
/// double integral over the piecewise-constant switching function.
fn cpmg_chi(kernel: &dyn Kernel, n: u32, t: f64) -> f64 {
    let mut edges = vec![0.0];
    edges.extend((1..=n).map(|k| t * (k as f64 - 0.5) / n as f64));
    edges.push(t);
    let segs: Vec<(f64, f64, f64)> =
        edges.windows(2).enumerate().map(|(i, w)| (w[0], w[1], if i % 2 == 0 { 1.0 } else { -1.0 })).collect();
    let mut total = 0.0;
    for &(a1, b1, s1) in &segs {
        for &(a2, b2, s2) in &segs {
            let pair = kernel.g(b1 - a2) - kernel.g(b1 - b2) - kernel.g(a1 - a2) + kernel.g(a1 - b2);
            total += s1 * s2 * pair;
        }
    }
    0.5 * total
}

fn time_domain_t2(kernel: &dyn Kernel, n: u32, guess: f64) -> f64 {
    bisect(|t| cpmg_chi(kernel, n, t) - 1.0, guess * 0.2, guess * 5.0)
}

fn criterion_8() -> Criterion {
    let mut c = Criterion::new();

    // Quasi-static Ramsey: exp(−σ²t²/2), T2* = √2/σ.
    let s = pipeline(Command::Spin, "spin-ramsey");
    c.within("pipeline T2*·σ/√2", num(&s, "/ramsey/t2_over_quasi_static"), (1.0, RAMSEY_REL_TOL));
    c.within("Gaussian stretch", num(&s, "/ramsey/stretch"), (2.0, 0.02));
    let psd = noise_preset("natural-abundance").expect("preset");
    let NoisePsd::QuasiStaticGaussian { sigma } = psd else { panic!("quasi-static preset") };
    let t2_star = 2f64.sqrt() / sigma;
    let taus: Vec<f64> = (1..=60).map(|k| 3.0 * t2_star * k as f64 / 60.0).collect();
    let res = ramsey_decay(&psd, 0.0, &taus, None).expect("ramsey");
    let worst = res
        .decay_curve
        .iter()
        .map(|p| (p.coherence - (-0.5 * (sigma * p.tau).powi(2)).exp()).abs())
        .fold(0.0, f64::max);
    c.check("Ramsey curve is exp(−σ²t²/2)", worst < 1e-6, format!("max |Δ| = {worst:.1e}"));
    c.within("fitted T2* / (√2/σ)", res.t2 / t2_star, (1.0, RAMSEY_REL_TOL));

    // OU slow bath: filter function vs time domain vs Monte Carlo.
    let ou = noise_preset("ou-slow-bath").expect("preset");
    let NoisePsd::OrnsteinUhlenbeck { sigma, tau_c } = ou else { panic!("OU preset") };
    let kernel = OuKernel { sigma, tau_c };
    let orders = [1u32, 2, 4, 8, 16, 32];
    let mut logs = (Vec::new(), Vec::new());
    for &n in &orders {
        let ff = filter_t2(&ou, &SequenceKind::Cpmg { n }, None).expect("filter T2");
        let td = time_domain_t2(&kernel, n, ff);
        c.check(
            &format!("OU N={n} filter vs time domain"),
            (ff / td - 1.0).abs() < TIME_DOMAIN_REL_TOL,
            format!("{:.4e} vs {:.4e}", ff, td),
        );
        logs.0.push((n as f64).ln());
        logs.1.push(td.ln());
    }
    c.within("oracle slow-bath β", ols(&logs.0, &logs.1).0, SLOW_BATH_BETA);
    let s = pipeline(Command::Spin, "spin-slow-bath");
    c.within("pipeline slow-bath β", num(&s, "/scaling/beta"), SLOW_BATH_BETA);
    for n in [1u32, 4, 16] {
        let ff = filter_t2(&ou, &SequenceKind::Cpmg { n }, None).expect("filter T2");
        let taus: Vec<f64> = (1..=40).map(|k| 3.0 * ff * k as f64 / 40.0).collect();
        let mc = monte_carlo_coherence(&ou, SequenceKind::Cpmg { n }, &taus, 2000, 0x5eed + n as u64, None).expect("mc");
        c.within(&format!("Monte Carlo / filter T2, N={n}"), mc.t2 / ff, (1.0, MC_REL_TOL));
    }
    c.check(
        "pipeline Monte Carlo agreement",
        num(&s, "/monte_carlo/max_relative_deviation") <= MC_REL_TOL,
        format!("{:.4}", num(&s, "/monte_carlo/max_relative_deviation")),
    );

    // Fitted spectrum: β and T2(32), plus a time-domain check of T2(32).
    let lin = noise_preset("linear-scaling").expect("preset");
    let NoisePsd::PowerLaw { amplitude, high_cutoff, .. } = lin else { panic!("power-law preset") };
    let s = pipeline(Command::Spin, "spin");
    c.between("fitted-spectrum β", num(&s, "/scaling/beta"), LINEAR_BETA.0, LINEAR_BETA.1);
    let t2_32 = num(&s, "/t2_by_order/32");
    c.within("T2(32) [ms]", t2_32 * 1e3, (T2_32.0 * 1e3, T2_32.1 * 1e3));
    let td = time_domain_t2(&WhiteKernel { amplitude, cutoff: high_cutoff }, 32, t2_32);
    c.check("T2(32) time domain", (td / t2_32 - 1.0).abs() < TIME_DOMAIN_REL_TOL, format!("{:.4e} vs {:.4e}", td, t2_32));
    c
}

/// Regression models exercising the master-equation core.
fn regression_models() -> Vec<(&'static str, LindbladModel, DensityMatrix, f64)> {
    let mut out = Vec::new();
    let tau = 2.0 * PI;

    // Driven, decaying, dephasing qubit.
    let h = &ops::sigma_z().scale(0.5 * tau * 0.2e9) + &ops::sigma_x().scale(0.5 * tau * 0.5e9);
    let model = LindbladModel::new(
        h,
        vec![Channel::new(ops::sigma_minus(), tau * 0.1e9), Channel::new(ops::sigma_z(), tau * 0.02e9)],
    )
    .unwrap();
    let rho0 = DensityMatrix::basis(model.space(), &[0]).unwrap();
    out.push(("driven qubit", model, rho0, 20e-9));

    // Thermal cavity.
    let n = 12;
    let a = ops::destroy(n);
    let (kappa, nth) = (tau * 1e9, 0.4);
    let model = LindbladModel::new(
        ops::number(n).scale(tau * 0.3e9),
        vec![Channel::new(a.clone(), kappa * (nth + 1.0)), Channel::new(a.dag(), kappa * nth)],
    )
    .unwrap();
    let rho0 = DensityMatrix::basis(model.space(), &[2]).unwrap();
    out.push(("thermal cavity", model, rho0, 5e-9));

    // Driven Jaynes-Cummings at the nanocavity parameters.
    let nf = 6;
    let space = HilbertSpace::new(vec![nf, 2]).unwrap();
    let a = tensor_product(&[ops::destroy(nf), ops::identity(2)]).unwrap();
    let sm = tensor_product(&[ops::identity(nf), ops::sigma_minus()]).unwrap();
    let (g, k, gam, eps) = (tau * 2.1e9, tau * 57e9, tau * 0.3e9, tau * 8e9);
    let coupling = (&(&a.dag() * &sm) + &(&sm.dag() * &a)).scale(g);
    let h = &coupling + &(&a + &a.dag()).scale(eps);
    let model = LindbladModel::new(h, vec![Channel::new(a, k), Channel::new(sm, gam)]).unwrap();
    assert_eq!(model.space(), &space);
    let rho0 = DensityMatrix::basis(model.space(), &[0, 1]).unwrap();
    out.push(("driven Jaynes-Cummings", model, rho0, 2e-9));

    // Lambda system with two drives.
    let proj = |i: usize, j: usize| {
        let mut m = nalgebra::DMatrix::<Complex64>::zeros(3, 3);
        m[(i, j)] = Complex64::new(1.0, 0.0);
        Operator::local(m).unwrap()
    };
    let drive = &(&proj(0, 2) + &proj(2, 0)).scale(tau * 0.2e9) + &(&proj(1, 2) + &proj(2, 1)).scale(tau * 0.15e9);
    let h = &drive + &proj(2, 2).scale(tau * 0.5e9);
    let model = LindbladModel::new(
        h,
        vec![
            Channel::new(proj(0, 2), tau * 0.05e9),
            Channel::new(proj(1, 2), tau * 0.04e9),
            Channel::new(&proj(0, 0) - &proj(1, 1), tau * 0.01e9),
        ],
    )
    .unwrap();
    let rho0 = DensityMatrix::basis(model.space(), &[0]).unwrap();
    out.push(("driven lambda system", model, rho0, 40e-9));

    // Two emitters with collective and individual decay, weakly driven.
    let s1 = tensor_product(&[ops::sigma_minus(), ops::identity(2)]).unwrap();
    let s2 = tensor_product(&[ops::identity(2), ops::sigma_minus()]).unwrap();
    let sum = &s1 + &s2;
    let h = (&sum + &sum.dag()).scale(tau * 0.05e9);
    let model = LindbladModel::new(
        h,
        vec![Channel::new(sum, tau * 0.09e9), Channel::new(s1, tau * 0.01e9), Channel::new(s2, tau * 0.01e9)],
    )
    .unwrap();
    let rho0 = DensityMatrix::basis(model.space(), &[1, 0]).unwrap();
    out.push(("collective emitters", model, rho0, 40e-9));
    out
}

fn criterion_9() -> Criterion {
    let mut c = Criterion::new();
    let (mut drift, mut min_eig, mut residual): (f64, f64, f64) = (0.0, f64::INFINITY, 0.0);
    for (name, model, rho0, duration) in regression_models() {
        let grid = TimeGrid::new(0.0, duration, 201).unwrap();
        for rho in evolve_master(&model, &rho0, &grid).unwrap() {
            drift = drift.max((rho.trace() - 1.0).abs());
            min_eig = min_eig.min(rho.min_eigenvalue());
        }
        match steady_state(&model) {
            Ok(ss) => {
                residual = residual.max(stationarity_residual(&model, &ss));
                min_eig = min_eig.min(ss.min_eigenvalue());
            }
            Err(e) => c.check(name, false, format!("steady state failed: {e}")),
        }
    }
    c.check("trace drift", drift < TRACE_DRIFT_MAX, format!("{drift:.2e}"));
    c.check("positivity", min_eig > POSITIVITY_MIN, format!("min eigenvalue {min_eig:.2e}"));
    c.check("steady-state residual", residual < RESIDUAL_MAX, format!("{residual:.2e}"));

    // Coherent-state occupation ε²/(κ²/4 + Δ²).
    let n = 24;
    let a = ops::destroy(n);
    let mut worst: f64 = 0.0;
    for (delta, eps, kappa) in [(0.0, 0.5e9, 3e9), (1.3e9, 0.8e9, 3e9), (-2e9, 1.5e9, 2e9), (0.4e9, 2.0e9, 5e9)] {
        let h = &ops::number(n).scale(delta) + &(&a + &a.dag()).scale(eps);
        let model = LindbladModel::new(h, vec![Channel::new(a.clone(), kappa)]).unwrap();
        let rho = steady_state(&model).unwrap();
        let photons = (&a.dag() * &a).expect(&rho).re;
        let exact = eps * eps / (kappa * kappa / 4.0 + delta * delta);
        worst = worst.max((photons / exact - 1.0).abs());
    }
    c.check("driven cavity photon number", worst < CAVITY_PHOTON_REL_TOL, format!("max rel. error {worst:.1e}"));

    // The cavity module's driven solver against the same closed form.
    let empty = CoupledSystem { cavity: CavityParams::symmetric(406.7e12, 57e9), emitters: vec![] };
    let eps = 10e9;
    let probe = 406.7e12 + 5e9;
    let ss = driven_steady_state(&empty, &DriveParams { frequency: probe, amplitude: eps }).unwrap();
    let exact = eps * eps / (57e9f64.powi(2) / 4.0 + 5e9f64.powi(2));
    let rel = (ss.intracavity_photons / exact - 1.0).abs();
    c.check("cavity module photon number", rel < CAVITY_PHOTON_REL_TOL, format!("rel. error {rel:.1e}"));
    c
}

type CriterionFn = fn() -> Criterion;

fn main() {
    let criteria: [(&str, CriterionFn); 9] = [
        ("1 phonon-rate calibration", criterion_1),
        ("2 thermal polarization", criterion_2),
        ("3 cooperativity arithmetic", criterion_3),
        ("4 extinction", criterion_4),
        ("5 photon statistics", criterion_5),
        ("6 two-photon interference", criterion_6),
        ("7 superradiance", criterion_7),
        ("8 spin coherence", criterion_8),
        ("9 core solver properties", criterion_9),
    ];
    let mut failed = 0;
    for (name, f) in criteria {
        let start = Instant::now();
        let c = f();
        let secs = start.elapsed().as_secs_f64();
        let status = if c.failures.is_empty() { "PASS" } else { "FAIL" };
        println!("{status} criterion {name} ({secs:.2} s)");
        for note in &c.notes {
            println!("       {note}");
        }
        for fail in &c.failures {
            println!("     ! {fail}");
        }
        if !c.failures.is_empty() {
            failed += 1;
        }
    }
    println!("acceptance: {} of 9 criteria passed", 9 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
