//! Convolutional reconstruction `x~(t) = (1/lambda) sum_n q_n phi(t - n/lambda)`,
//! sup-norm error measurement, the padded-interval truncation check, decay
//! experiments over an ensemble and rate fitting.

use std::io::Write;

use rayon::prelude::*;

use crate::entropy::theorem_alpha;
use crate::error::{domain, Error, Result};
use crate::kernels::{compute_t0, Kernel, Support};
use crate::numerics::{fmt_f64, grid, refined_grid_max};
use crate::quantizers::{make_alphabet, Encoder, SampleSequence};
use crate::signals::{sample_signal, BandlimitedSignal};

/// Index range of `seq` whose kernel translates can reach `t`.
fn reach<S: SampleSequence + ?Sized>(seq: &S, kernel: &Kernel, t: f64) -> (i64, i64) {
    let (first, last) = (seq.first_index(), seq.last_index());
    match kernel.support() {
        Support::Compact(r) => {
            let lambda = seq.rate();
            let lo = ((t - r) * lambda).ceil() as i64;
            let hi = ((t + r) * lambda).floor() as i64;
            (lo.max(first), hi.min(last))
        }
        Support::Unbounded => (first, last),
    }
}

/// `(1/lambda) sum_n q_n phi(t - n/lambda)` over the window of `seq`.
pub fn reconstruct_at<S: SampleSequence + ?Sized>(seq: &S, kernel: &Kernel, t: f64) -> f64 {
    let lambda = seq.rate();
    let (lo, hi) = reach(seq, kernel, t);
    if hi < lo {
        return 0.0;
    }
    let coeffs = seq.coefficients();
    let base = seq.first_index();
    (lo..=hi)
        .map(|n| coeffs[(n - base) as usize] * kernel.eval(t - n as f64 / lambda))
        .sum::<f64>()
        / lambda
}

fn interval_indices(lambda: f64, t0: f64, t1: f64) -> (i64, i64) {
    ((t0 * lambda).ceil() as i64, (t1 * lambda).floor() as i64)
}

/// Measured gap between the full-window reconstruction and the one restricted
/// to the padded interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncationCheck {
    pub t0_margin: f64,
    pub deviation: f64,
    /// `2^(-alpha K lambda + 1)`.
    pub bound: f64,
}

/// `sup_{t in [t0, t1]} |x~(t) - f~(t)|` where `f~` keeps only indices in
/// `lambda * [t0 - padding, t1 + padding]`. Sampled on a grid of spacing
/// `1 / (8 lambda)` with parabolic refinement.
pub fn truncation_deviation_with_padding<S: SampleSequence + ?Sized>(
    seq: &S,
    kernel: &Kernel,
    t0: f64,
    t1: f64,
    padding: f64,
) -> Result<f64> {
    if !(t1 > t0) || !(padding >= 0.0) {
        return domain("need t1 > t0 and a nonnegative padding");
    }
    let lambda = seq.rate();
    let (keep_lo, keep_hi) = interval_indices(lambda, t0 - padding, t1 + padding);
    if seq.first_index() > keep_lo || seq.last_index() < keep_hi {
        return domain(format!(
            "stream window [{}, {}] does not contain the padded index range [{keep_lo}, {keep_hi}]",
            seq.first_index(),
            seq.last_index()
        ));
    }
    let coeffs = seq.coefficients();
    let base = seq.first_index();
    let dropped = |t: f64| {
        let (lo, hi) = reach(seq, kernel, t);
        let mut acc = 0.0;
        for n in lo..=hi {
            if n < keep_lo || n > keep_hi {
                acc += coeffs[(n - base) as usize] * kernel.eval(t - n as f64 / lambda);
            }
        }
        (acc / lambda).abs()
    };
    let pts = grid(t0, t1, 1.0 / (8.0 * lambda));
    let vals: Vec<f64> = pts.iter().map(|&t| dropped(t)).collect();
    Ok(refined_grid_max(&pts, &vals, None).map_or(0.0, |m| m.value))
}

/// Truncation check on the padded interval `I~ = [t0 - T0, t1 + T0]`, with
/// `T0 = T0(lambda)` for the given rate constant and bit depth. A negative
/// `T0` (target above half the envelope mass) pads by 0.
pub fn truncated_deviation<S: SampleSequence + ?Sized>(
    seq: &S,
    kernel: &Kernel,
    alpha: f64,
    bit_depth: u32,
    t0: f64,
    t1: f64,
) -> Result<TruncationCheck> {
    let lambda = seq.rate();
    let margin = compute_t0(kernel, alpha, bit_depth, lambda)?.max(0.0);
    let deviation = truncation_deviation_with_padding(seq, kernel, t0, t1, margin)?;
    Ok(TruncationCheck {
        t0_margin: margin,
        deviation,
        bound: (1.0 - alpha * bit_depth as f64 * lambda).exp2(),
    })
}

/// `sup |x(t) - x~(t)|` over a grid on `[t0, t1]`, restricted to
/// `t >= time_floor` when given.
pub fn sup_error<S: SampleSequence + ?Sized>(
    x: &BandlimitedSignal,
    seq: &S,
    kernel: &Kernel,
    t0: f64,
    t1: f64,
    grid_step: f64,
    time_floor: Option<f64>,
) -> Result<f64> {
    if !(t1 > t0) || !(grid_step > 0.0) {
        return domain(format!("need t1 > t0 and grid_step > 0 (got [{t0}, {t1}], {grid_step})"));
    }
    if let Some(floor) = time_floor {
        if floor > t1 {
            return domain(format!("time floor {floor} lies beyond the interval end {t1}"));
        }
    }
    let pts = grid(t0, t1, grid_step);
    let first = time_floor.map_or(0, |f| pts.partition_point(|&t| t < f));
    // Points before the floor (except the one just before, which only feeds
    // the parabola of its neighbour) are never inspected.
    let start = first.saturating_sub(1);
    let mut vals = vec![0.0; pts.len()];
    for i in start..pts.len() {
        let t = pts[i];
        vals[i] = (x.eval(t) - reconstruct_at(seq, kernel, t)).abs();
    }
    refined_grid_max(&pts, &vals, time_floor)
        .map(|m| m.value)
        .ok_or_else(|| Error::Domain("no grid point at or after the time floor".into()))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayPoint {
    pub lambda: f64,
    pub sup_error: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FitModel {
    /// `log2 e = c - rate * lambda`.
    Exponential,
    /// `log2 e = c - rate * log2 lambda`.
    Polynomial,
}

impl std::fmt::Display for FitModel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            FitModel::Exponential => "exponential",
            FitModel::Polynomial => "polynomial",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateFit {
    pub model: FitModel,
    /// `max(0, -slope)`.
    pub rate: f64,
    pub slope: f64,
    pub intercept: f64,
    /// Root-mean-square residual of the fit in `log2` units.
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecayCurve {
    pub scheme: String,
    pub kernel: String,
    pub points: Vec<DecayPoint>,
    pub fit: Option<RateFit>,
}

impl DecayCurve {
    /// Attaches a fit of the given model; needs at least three points.
    pub fn with_fit(mut self, model: FitModel) -> Result<Self> {
        self.fit = Some(fit_rate(&self, model)?);
        Ok(self)
    }

    /// CSV with header `lambda,sup_error`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["lambda", "sup_error"])?;
        for p in &self.points {
            w.write_record([fmt_f64(p.lambda), fmt_f64(p.sup_error)])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Fit summary CSV with header `model,rate,residual`.
pub fn write_fits_csv<W: Write>(fits: &[RateFit], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["model", "rate", "residual"])?;
    for f in fits {
        w.write_record([f.model.to_string(), fmt_f64(f.rate), fmt_f64(f.residual)])?;
    }
    w.flush()?;
    Ok(())
}

/// Least-squares fit of `log2(sup_error)` against `lambda` (exponential) or
/// `log2(lambda)` (polynomial).
pub fn fit_rate(curve: &DecayCurve, model: FitModel) -> Result<RateFit> {
    if curve.points.len() < 3 {
        return domain(format!("a fit needs at least 3 points, got {}", curve.points.len()));
    }
    if let Some(p) = curve.points.iter().find(|p| !(p.sup_error > 0.0)) {
        return Err(Error::Fit(format!(
            "sup_error {} at lambda = {} is not positive (exact reconstruction?)",
            p.sup_error, p.lambda
        )));
    }
    let xs: Vec<f64> = curve
        .points
        .iter()
        .map(|p| match model {
            FitModel::Exponential => p.lambda,
            FitModel::Polynomial => p.lambda.log2(),
        })
        .collect();
    let ys: Vec<f64> = curve.points.iter().map(|p| p.sup_error.log2()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    if sxx == 0.0 {
        return domain("all abscissae coincide");
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| {
            let r = y - (intercept + slope * x);
            r * r
        })
        .sum();
    Ok(RateFit {
        model,
        rate: (-slope).max(0.0),
        slope,
        intercept,
        residual: (sse / n).sqrt(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayConfig {
    pub bit_depth: u32,
    pub t0: f64,
    pub t1: f64,
    /// Error grid spacing; `None` uses `1 / (8 lambda)`.
    pub grid_step: Option<f64>,
    /// Rate constant used to size the padding `T0`; `None` uses the bound for
    /// the largest amplitude certificate in the ensemble.
    pub padding_alpha: Option<f64>,
}

/// Runs every signal of the ensemble through the encoder at each rate and
/// records the ensemble-maximal sup error.
///
/// Each signal is sampled on the index window `lambda * [t0 - T0, t1 + T0]`,
/// encoded from a zero initial state, and reconstructed on `[t0, t1]`.
pub fn decay_experiment(
    ensemble: &[BandlimitedSignal],
    encoder: Encoder,
    kernel: &Kernel,
    lambdas: &[f64],
    config: &DecayConfig,
) -> Result<DecayCurve> {
    if ensemble.is_empty() {
        return domain("decay experiment needs at least one signal");
    }
    if lambdas.is_empty() {
        return domain("decay experiment needs at least one rate");
    }
    if lambdas.windows(2).any(|w| w[1] <= w[0]) {
        return domain("rates must be strictly increasing");
    }
    if !(config.t1 > config.t0) {
        return domain("decay interval must have t1 > t0");
    }
    let alphabet = make_alphabet(config.bit_depth)?;
    let alpha = match config.padding_alpha {
        Some(a) => a,
        None => {
            let mu = ensemble
                .iter()
                .map(BandlimitedSignal::amplitude_bound)
                .fold(0.0, f64::max)
                .min(1.0);
            theorem_alpha(mu, config.bit_depth)?.max(1e-3)
        }
    };
    let margins = lambdas
        .iter()
        .map(|&l| Ok(compute_t0(kernel, alpha, config.bit_depth, l)?.max(0.0)))
        .collect::<Result<Vec<_>>>()?;

    let tasks: Vec<(usize, usize)> = (0..lambdas.len())
        .flat_map(|li| (0..ensemble.len()).map(move |si| (li, si)))
        .collect();
    let errors = tasks
        .par_iter()
        .map(|&(li, si)| {
            let lambda = lambdas[li];
            let margin = margins[li];
            let (lo, hi) = interval_indices(lambda, config.t0 - margin, config.t1 + margin);
            let samples = sample_signal(&ensemble[si], lambda, lo, hi)?;
            let stream = encoder.encode(&samples, &alphabet)?;
            let step = config.grid_step.unwrap_or(1.0 / (8.0 * lambda));
            sup_error(&ensemble[si], &stream, kernel, config.t0, config.t1, step, None)
        })
        .collect::<Result<Vec<f64>>>()?;

    let points = lambdas
        .iter()
        .enumerate()
        .map(|(li, &lambda)| DecayPoint {
            lambda,
            sup_error: errors[li * ensemble.len()..(li + 1) * ensemble.len()]
                .iter()
                .copied()
                .fold(0.0, f64::max),
        })
        .collect();
    Ok(DecayCurve {
        scheme: format!("{encoder}(K={})", config.bit_depth),
        kernel: kernel.to_string(),
        points,
        fit: None,
    })
}
