//! Amplitude-bounded bandlimited test signals.
//!
//! Signals are finite cosine sums `x(t) = sum a_k cos(2 pi f_k t + theta_k)`
//! with every frequency inside `[-1/2 + guard, 1/2 - guard]`, i.e. inside the
//! unit band with a margin. Such sums are exactly evaluable, which makes them
//! usable as ground truth for reconstruction error.
//!
//! The amplitude certificate is `sum |a_k|`. It bounds `|x|` on the whole real
//! line, and for rationally independent frequencies it is also the supremum.

use std::f64::consts::PI;
use std::io::{Read, Write};

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;

use crate::error::{domain, Result};
use crate::numerics::{fmt_f64, golden_max, grid};

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
pub struct Tone {
    #[serde(rename = "a")]
    pub amplitude: f64,
    #[serde(rename = "f")]
    pub frequency: f64,
    #[serde(rename = "theta")]
    pub phase: f64,
}

impl Tone {
    pub fn eval(&self, t: f64) -> f64 {
        self.amplitude * (2.0 * PI * self.frequency * t + self.phase).cos()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BandlimitedSignal {
    terms: Vec<Tone>,
    amplitude_bound: f64,
    band_guard: f64,
}

impl BandlimitedSignal {
    pub fn new(terms: Vec<Tone>, band_guard: f64) -> Result<Self> {
        if !(band_guard > 0.0 && band_guard < 0.5) {
            return domain(format!("band guard {band_guard} must lie in (0, 1/2)"));
        }
        let edge = 0.5 - band_guard;
        if let Some(t) = terms.iter().find(|t| t.frequency.abs() > edge) {
            return domain(format!(
                "frequency {} exceeds the guarded band edge {edge}",
                t.frequency
            ));
        }
        if terms.iter().any(|t| !t.amplitude.is_finite() || !t.phase.is_finite()) {
            return domain("tone parameters must be finite");
        }
        let amplitude_bound = terms.iter().map(|t| t.amplitude.abs()).sum();
        Ok(Self {
            terms,
            amplitude_bound,
            band_guard,
        })
    }

    pub fn zero(band_guard: f64) -> Result<Self> {
        Self::new(Vec::new(), band_guard)
    }

    pub fn terms(&self) -> &[Tone] {
        &self.terms
    }

    /// Certified bound on `sup |x|` over the real line.
    pub fn amplitude_bound(&self) -> f64 {
        self.amplitude_bound
    }

    pub fn band_guard(&self) -> f64 {
        self.band_guard
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.terms.iter().map(|tone| tone.eval(t)).sum()
    }

    /// Term manifest: CSV with header `a,f,theta`, one tone per row, values
    /// written in shortest round-trip form.
    pub fn write_manifest<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["a", "f", "theta"])?;
        for t in &self.terms {
            w.write_record([fmt_f64(t.amplitude), fmt_f64(t.frequency), fmt_f64(t.phase)])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_manifest<R: Read>(input: R, band_guard: f64) -> Result<Self> {
        let mut r = csv::Reader::from_reader(input);
        let terms = r.deserialize().collect::<std::result::Result<Vec<Tone>, _>>()?;
        Self::new(terms, band_guard)
    }
}

/// Draws a seeded random cosine sum whose amplitude certificate equals
/// `mu_target`.
///
/// Frequencies are uniform on `[0, 1/2 - band_guard]`, phases uniform on
/// `[0, 2 pi)`, and raw amplitudes uniform on `[1/2, 1]` before rescaling.
pub fn random_bandlimited(
    seed: u64,
    num_terms: usize,
    mu_target: f64,
    band_guard: f64,
) -> Result<BandlimitedSignal> {
    if !(mu_target > 0.0 && mu_target < 1.0) {
        return domain(format!("target amplitude {mu_target} must lie in (0, 1)"));
    }
    if !(band_guard > 0.0 && band_guard < 0.5) {
        return domain(format!("band guard {band_guard} must lie in (0, 1/2)"));
    }
    if num_terms == 0 {
        return domain("a random signal needs at least one term");
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let edge = 0.5 - band_guard;
    let mut terms: Vec<Tone> = (0..num_terms)
        .map(|_| Tone {
            amplitude: rng.random_range(0.5..=1.0),
            frequency: rng.random_range(0.0..=edge),
            phase: rng.random_range(0.0..2.0 * PI),
        })
        .collect();
    let total: f64 = terms.iter().map(|t| t.amplitude).sum();
    for t in &mut terms {
        t.amplitude *= mu_target / total;
    }
    if num_terms == 1 {
        terms[0].amplitude = mu_target;
    }
    BandlimitedSignal::new(terms, band_guard)
}

/// Estimate of `sup |x|` over `[t0, t1]`: the maximum over a grid of spacing
/// `step`, refined by golden-section search around the best grid local
/// maxima. Never exceeds the amplitude certificate.
pub fn sup_norm_estimate(x: &BandlimitedSignal, t0: f64, t1: f64, step: f64) -> Result<f64> {
    if !(t1 > t0) || !(step > 0.0) {
        return domain(format!("need t1 > t0 and step > 0 (got [{t0}, {t1}], step {step})"));
    }
    let pts = grid(t0, t1, step);
    let vals: Vec<f64> = pts.iter().map(|&t| x.eval(t).abs()).collect();
    let mut best = vals.iter().copied().fold(0.0, f64::max);

    // Refine the highest few local maxima; nearby peaks of a sum of tones can
    // swap order once resolved below the grid spacing.
    let mut peaks: Vec<usize> = (0..pts.len())
        .filter(|&i| {
            (i == 0 || vals[i] >= vals[i - 1]) && (i + 1 == pts.len() || vals[i] >= vals[i + 1])
        })
        .collect();
    peaks.sort_by(|&a, &b| vals[b].total_cmp(&vals[a]));
    for &i in peaks.iter().take(8) {
        let lo = if i == 0 { pts[0] } else { pts[i - 1] };
        let hi = if i + 1 == pts.len() { pts[i] } else { pts[i + 1] };
        let m = golden_max(|t| x.eval(t).abs(), lo, hi, 1e-11);
        best = best.max(m.value);
    }
    Ok(best.min(x.amplitude_bound()))
}

/// Uniform samples `x(n / lambda)` for `n` in `n_min..=n_max`, tagged with the
/// rate and first index so that encoders and reconstruction can place them.
#[derive(Debug, Clone, PartialEq)]
pub struct Samples {
    pub lambda: f64,
    pub n_min: i64,
    pub values: Vec<f64>,
}

pub fn sample_signal(x: &BandlimitedSignal, lambda: f64, n_min: i64, n_max: i64) -> Result<Samples> {
    if !(lambda > 1.0) {
        return domain(format!("oversampling rate {lambda} must exceed 1"));
    }
    if n_max < n_min {
        return domain(format!("empty index range [{n_min}, {n_max}]"));
    }
    let values = (n_min..=n_max).map(|n| x.eval(n as f64 / lambda)).collect();
    Ok(Samples {
        lambda,
        n_min,
        values,
    })
}
