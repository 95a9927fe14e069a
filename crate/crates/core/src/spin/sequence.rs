use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SequenceKind {
    Ramsey,
    /// `n` π pulses at `T(k − ½)/n`; `n = 1` is the Hahn echo.
    Cpmg { n: u32 },
}

impl SequenceKind {
    pub fn validate(&self) -> Result<()> {
        match self {
            SequenceKind::Cpmg { n: 0 } => Err(invalid("CPMG needs at least one π pulse")),
            _ => Ok(()),
        }
    }

    pub fn pulses(&self) -> u32 {
        match self {
            SequenceKind::Ramsey => 0,
            SequenceKind::Cpmg { n } => *n,
        }
    }

    /// Constant-sign segments `(start, length, sign)` of the toggling
    /// function over `[0, total_time]`.
    pub fn segments(&self, total_time: f64) -> Vec<(f64, f64, f64)> {
        let n = self.pulses() as usize;
        let mut edges = Vec::with_capacity(n + 2);
        edges.push(0.0);
        edges.extend((1..=n).map(|k| total_time * (k as f64 - 0.5) / n as f64));
        edges.push(total_time);
        edges
            .windows(2)
            .enumerate()
            .map(|(k, w)| (w[0], w[1] - w[0], if k % 2 == 0 { 1.0 } else { -1.0 }))
            .collect()
    }

    /// `Y(ω) = ∫ y(t) e^{iωt} dt`.
    pub fn filter_amplitude(&self, total_time: f64, omega: f64) -> Complex64 {
        self.segments(total_time)
            .iter()
            .map(|&(start, len, sign)| {
                let x = 0.5 * omega * len;
                let sinc = if x.abs() < 1e-8 { 1.0 - x * x / 6.0 } else { x.sin() / x };
                Complex64::from_polar(sign * len * sinc, omega * (start + 0.5 * len))
            })
            .sum()
    }

    /// `Σ c_j²` over the jumps of `y` (including the switch-on and -off);
    /// `|Y|²` averages to this over `ω²` at high frequency.
    pub(crate) fn jump_weight(&self) -> f64 {
        (4 * self.pulses() + 2) as f64
    }

    /// `∫ y dt`.
    pub fn area(&self, total_time: f64) -> f64 {
        self.segments(total_time).iter().map(|(_, len, sign)| len * sign).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PulseSequence {
    pub kind: SequenceKind,
    /// s.
    pub total_time: f64,
    /// Deliberate detuning of the drive from the qubit, Hz.
    pub pulse_detuning: f64,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cpmg_pulse_timing() {
        let seg = SequenceKind::Cpmg { n: 2 }.segments(4.0);
        let expect = [(0.0, 1.0, 1.0), (1.0, 2.0, -1.0), (3.0, 1.0, 1.0)];
        assert_eq!(seg.len(), 3);
        for (s, e) in seg.iter().zip(expect) {
            assert!((s.0 - e.0).abs() < 1e-15 && (s.1 - e.1).abs() < 1e-15 && s.2 == e.2);
        }
        assert_eq!(SequenceKind::Cpmg { n: 4 }.area(1.0), 0.0);
        assert_eq!(SequenceKind::Ramsey.area(2.5), 2.5);
    }

    #[test]
    fn filter_matches_direct_integral() {
        let kind = SequenceKind::Cpmg { n: 3 };
        let (t, w) = (1.3, 7.9);
        let n = 240_000;
        let dt = t / n as f64;
        let seg = kind.segments(t);
        let direct: Complex64 = (0..n)
            .map(|k| {
                let tt = (k as f64 + 0.5) * dt;
                let sign = seg.iter().find(|s| tt >= s.0 && tt < s.0 + s.1).unwrap().2;
                Complex64::from_polar(sign * dt, w * tt)
            })
            .sum();
        assert!((direct - kind.filter_amplitude(t, w)).norm() < 1e-7);
        assert!((kind.filter_amplitude(t, 0.0).re - kind.area(t)).abs() < 1e-15);
    }
}
