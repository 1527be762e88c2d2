//! Entropy functions and the rate-constant bound for K-bit quantization.
//!
//! Binary entropy uses the positive convention
//! `h(p) = -p log2 p - (1 - p) log2 (1 - p)` with `0 log2 0 = 0`, so `h` is
//! continuous on `[0, 1]` with maximum 1 at `p = 1/2`. Under this convention
//! `H(a, 1/2) = 1 - h(a)`, and the rate bound
//! `alpha <= 1 - (1 - h((1 + mu) / 2)) / K` runs from 1 at `mu = 0` to
//! `1 - 1/K` at `mu = 1`.

use std::io::Write;

use crate::error::{domain, Result};
use crate::numerics::fmt_sig;

fn check_probability(name: &str, p: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&p) {
        return domain(format!("{name} = {p} is not a probability in [0, 1]"));
    }
    Ok(())
}

/// `x log2 x` with the limit value 0 at `x = 0`.
fn xlog2x(x: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x * x.log2()
    }
}

pub fn binary_entropy(p: f64) -> Result<f64> {
    check_probability("p", p)?;
    // `+ 0.0` turns the -0 at the endpoints into +0.
    Ok(-(xlog2x(p) + xlog2x(1.0 - p)) + 0.0)
}

/// Relative entropy (Kullback-Leibler divergence, in bits) between
/// Bernoulli(`a`) and Bernoulli(`p`).
pub fn relative_entropy(a: f64, p: f64) -> Result<f64> {
    check_probability("a", a)?;
    if !(p > 0.0 && p < 1.0) {
        return domain(format!("bias p = {p} must lie strictly inside (0, 1)"));
    }
    let term = |x: f64, y: f64| if x == 0.0 { 0.0 } else { x * (x / y).log2() };
    // Clamp tiny negative rounding at a = p.
    Ok((term(a, p) + term(1.0 - a, 1.0 - p)).max(0.0))
}

/// Upper bound on the exponential rate constant `alpha` in
/// `E(lambda) = O(2^(-alpha K lambda))` for K-bit schemes on signals of
/// amplitude at most `mu`.
pub fn theorem_alpha(mu: f64, bit_depth: u32) -> Result<f64> {
    if !(0.0..=1.0).contains(&mu) {
        return domain(format!("amplitude mu = {mu} must lie in [0, 1]"));
    }
    if bit_depth == 0 {
        return domain("bit depth K must be at least 1");
    }
    let h = binary_entropy((1.0 + mu) / 2.0)?;
    if bit_depth == 1 {
        return Ok(h);
    }
    Ok(1.0 - (1.0 - h) / bit_depth as f64)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundPoint {
    pub mu: f64,
    pub alpha: f64,
}

/// The rate bound as a function of amplitude for one bit depth.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundCurve {
    pub bit_depth: u32,
    pub points: Vec<BoundPoint>,
}

impl BoundCurve {
    /// CSV with header `mu,alpha`, values to 12 significant digits.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["mu", "alpha"])?;
        for p in &self.points {
            w.write_record([fmt_sig(p.mu, 12), fmt_sig(p.alpha, 12)])?;
        }
        w.flush()?;
        Ok(())
    }
}

pub fn bound_curve(bit_depth: u32, mu_grid: &[f64]) -> Result<BoundCurve> {
    if bit_depth == 0 {
        return domain("bit depth K must be at least 1");
    }
    if mu_grid.windows(2).any(|w| w[1] <= w[0]) {
        return domain("amplitude grid must be strictly increasing");
    }
    let points = mu_grid
        .iter()
        .map(|&mu| {
            Ok(BoundPoint {
                mu,
                alpha: theorem_alpha(mu, bit_depth)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(BoundCurve { bit_depth, points })
}

/// Published rate constant of the best known one-bit constructions, valid
/// for inputs with amplitude up to `amplitude_ceiling`. Carried as reference
/// data only.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReferenceRate {
    pub rate: f64,
    pub amplitude_ceiling: f64,
}

pub fn reference_upper_rate() -> ReferenceRate {
    ReferenceRate {
        rate: 0.102,
        amplitude_ceiling: 0.05,
    }
}
