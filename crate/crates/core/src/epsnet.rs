//! Exhaustive check of the counting argument behind the rate bound.
//!
//! A [`CountingInstance`] fixes a finite window of `M` quantized symbols
//! `q_n in A_K` and a set of linear constraints, one per grid point `j`:
//! `sum_n w_jn q_n >= threshold`. For a kernel-weighted instance the weights
//! are `w_jn = (1/lambda) phi((j - n) / lambda)`, symbols run over
//! `Z cap lambda * [-a - T0, a + T0]` and grid points over `Z cap lambda * [-a, a]`.
//!
//! Summing the constraints, every survivor satisfies
//! `sum_n c_n q_n >= G * threshold` with `c_n = sum_j w_jn` and `G` the grid
//! size, hence `sum_n q_n >= G * threshold - E` for any `E >= sum_n |c_n - 1|`.
//! With `mu' = (G * threshold - E) / M` the survivor count is at most
//! `2^(M (K - 1 + h((1 + mu') / 2)))` by the Chernoff-Hoeffding bound for
//! i.i.d. uniform symbols.

use std::io::Write;

use rayon::prelude::*;

use crate::deviations::{binomial_tail, threshold_count};
use crate::entropy::binary_entropy;
use crate::error::{domain, Error, Result};
use crate::kernels::Kernel;
use crate::numerics::fmt_f64;
use crate::quantizers::{make_alphabet, Alphabet};

/// Largest `K * M` accepted by [`enumerate_survivors`].
pub const ENUMERATION_BUDGET: u32 = 24;

/// Absolute slack on each constraint, so ties at the threshold survive.
pub const TIE_TOLERANCE: f64 = 1e-12;

/// Relative slack on `bernoulli_bound <= bound_N` for float rounding.
const BOUND_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct CountingInstance {
    bit_depth: u32,
    lambda: Option<f64>,
    kernel: Option<Kernel>,
    /// `a` in `I = [-a, a]`.
    half_width: f64,
    /// `T0` in `I~ = [-a - T0, a + T0]`.
    margin: f64,
    mu: f64,
    delta: f64,
    symbols: Vec<i64>,
    grid: Vec<i64>,
    /// `rows[j][i]` is the weight of symbol `symbols[i]` at grid point `grid[j]`.
    rows: Vec<Vec<f64>>,
}

impl CountingInstance {
    /// `M` symbols and `M` identical constraints `(1/M) sum_n q_n >= a`, so
    /// `c_n = 1` for every symbol.
    pub fn averaging(symbols: usize, bit_depth: u32, a: f64) -> Result<Self> {
        if symbols == 0 {
            return domain("an averaging instance needs at least one symbol");
        }
        check_bit_depth(bit_depth)?;
        check_threshold(a)?;
        let w = 1.0 / symbols as f64;
        Ok(CountingInstance {
            bit_depth,
            lambda: None,
            kernel: None,
            half_width: 0.0,
            margin: 0.0,
            mu: a,
            delta: 0.0,
            symbols: (0..symbols as i64).collect(),
            grid: (0..symbols as i64).collect(),
            rows: vec![vec![w; symbols]; symbols],
        })
    }

    /// Kernel-weighted instance with threshold `mu - 3 delta`.
    pub fn kernel_weighted(
        kernel: &Kernel,
        bit_depth: u32,
        lambda: f64,
        half_width: f64,
        margin: f64,
        mu: f64,
        delta: f64,
    ) -> Result<Self> {
        check_bit_depth(bit_depth)?;
        if !(lambda > 1.0) || !lambda.is_finite() {
            return domain(format!("rate lambda = {lambda} must exceed 1"));
        }
        if !(half_width > 0.0) || !(margin >= 0.0) {
            return domain("need a > 0 and T0 >= 0");
        }
        if !(delta >= 0.0) {
            return domain(format!("delta = {delta} must be nonnegative"));
        }
        check_threshold(mu - 3.0 * delta)?;
        let outer = half_width + margin;
        let symbols: Vec<i64> = ((-outer * lambda).ceil() as i64..=(outer * lambda).floor() as i64).collect();
        let grid: Vec<i64> =
            ((-half_width * lambda).ceil() as i64..=(half_width * lambda).floor() as i64).collect();
        if grid.is_empty() {
            return domain("grid Z cap lambda I is empty");
        }
        let rows = grid
            .iter()
            .map(|&j| {
                symbols
                    .iter()
                    .map(|&n| kernel.eval((j - n) as f64 / lambda) / lambda)
                    .collect()
            })
            .collect();
        Ok(CountingInstance {
            bit_depth,
            lambda: Some(lambda),
            kernel: Some(kernel.clone()),
            half_width,
            margin,
            mu,
            delta,
            symbols,
            grid,
            rows,
        })
    }

    /// Replaces the threshold level by `mu - 3 delta` with new values.
    pub fn with_level(mut self, mu: f64, delta: f64) -> Result<Self> {
        if !(delta >= 0.0) {
            return domain(format!("delta = {delta} must be nonnegative"));
        }
        check_threshold(mu - 3.0 * delta)?;
        self.mu = mu;
        self.delta = delta;
        Ok(self)
    }

    pub fn bit_depth(&self) -> u32 {
        self.bit_depth
    }

    pub fn lambda(&self) -> Option<f64> {
        self.lambda
    }

    pub fn symbol_count(&self) -> usize {
        self.symbols.len()
    }

    pub fn grid_count(&self) -> usize {
        self.grid.len()
    }

    pub fn symbols(&self) -> &[i64] {
        &self.symbols
    }

    /// `mu - 3 delta`.
    pub fn threshold(&self) -> f64 {
        self.mu - 3.0 * self.delta
    }

    /// `[mu - delta, mu - 2 delta, mu - 3 delta]`.
    pub fn thresholds(&self) -> [f64; 3] {
        [self.mu - self.delta, self.mu - 2.0 * self.delta, self.mu - 3.0 * self.delta]
    }

    /// `c_n = sum_j w_jn`.
    pub fn coefficients(&self) -> Vec<f64> {
        (0..self.symbols.len())
            .map(|i| self.rows.iter().map(|r| r[i]).sum())
            .collect()
    }
}

fn check_bit_depth(bit_depth: u32) -> Result<()> {
    if bit_depth == 0 {
        return domain("bit depth K must be at least 1");
    }
    Ok(())
}

fn check_threshold(t: f64) -> Result<()> {
    if !(t < 1.0) || !t.is_finite() {
        return domain(format!("threshold {t} must be below 1"));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SymbolClass {
    /// `n in lambda * I^` with `I^ = [-(a - T0), a - T0]`.
    Interior,
    Edge,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientProfile {
    pub coefficients: Vec<f64>,
    pub classes: Vec<SymbolClass>,
    /// `||rho||_1 + 1 + rho(0)`.
    pub crude_bound: f64,
    pub edge_count: usize,
    /// `4 lambda T0 + 4`.
    pub edge_allowance: f64,
    /// `max |c_n - 1|` over interior symbols (0 when there are none).
    pub interior_deviation: f64,
    /// `sum_n |c_n - 1|`.
    pub total_deviation: f64,
}

impl CoefficientProfile {
    /// `sum_{interior} |c_n - 1| + D * edge_count`.
    pub fn budget(&self) -> f64 {
        let interior: f64 = self
            .coefficients
            .iter()
            .zip(&self.classes)
            .filter(|(_, c)| **c == SymbolClass::Interior)
            .map(|(c, _)| (c - 1.0).abs())
            .sum();
        interior + self.crude_bound * self.edge_count as f64
    }
}

/// Coefficients `c_n` with their interior/edge split. Averaging instances
/// have no kernel; all their symbols are interior and `D = 0`.
pub fn coefficient_profile(instance: &CountingInstance) -> Result<CoefficientProfile> {
    let coefficients = instance.coefficients();
    let total_deviation = coefficients.iter().map(|c| (c - 1.0).abs()).sum();
    let (Some(kernel), Some(lambda)) = (&instance.kernel, instance.lambda) else {
        let interior_deviation = coefficients.iter().map(|c| (c - 1.0).abs()).fold(0.0, f64::max);
        return Ok(CoefficientProfile {
            classes: vec![SymbolClass::Interior; coefficients.len()],
            coefficients,
            crude_bound: 0.0,
            edge_count: 0,
            edge_allowance: 0.0,
            interior_deviation,
            total_deviation,
        });
    };
    let inner = instance.half_width - instance.margin;
    if !(inner > 0.0) {
        return domain(format!(
            "a = {} does not exceed T0 = {}, so the interior interval is empty",
            instance.half_width, instance.margin
        ));
    }
    let classes: Vec<SymbolClass> = instance
        .symbols
        .iter()
        .map(|&n| {
            let t = n as f64 / lambda;
            if t.abs() <= inner {
                SymbolClass::Interior
            } else {
                SymbolClass::Edge
            }
        })
        .collect();
    let edge_count = classes.iter().filter(|&&c| c == SymbolClass::Edge).count();
    let interior_deviation = coefficients
        .iter()
        .zip(&classes)
        .filter(|(_, c)| **c == SymbolClass::Interior)
        .map(|(c, _)| (c - 1.0).abs())
        .fold(0.0, f64::max);
    Ok(CoefficientProfile {
        coefficients,
        classes,
        crude_bound: kernel.envelope_l1() + 1.0 + kernel.envelope(0.0),
        edge_count,
        edge_allowance: 4.0 * lambda * instance.margin + 4.0,
        interior_deviation,
        total_deviation,
    })
}

/// `2^(M (K - 1 + h((1 + mu') / 2)))` for `0 <= mu' < 1`.
pub fn counting_bound(symbols: usize, bit_depth: u32, mu_prime: f64) -> Result<f64> {
    check_bit_depth(bit_depth)?;
    if !(0.0..1.0).contains(&mu_prime) {
        return domain(format!("effective amplitude mu' = {mu_prime} must lie in [0, 1)"));
    }
    Ok(bound_at(symbols, bit_depth, mu_prime))
}

/// The same formula on `[0, 1]`, with `mu'` clamped into that range.
fn bound_at(symbols: usize, bit_depth: u32, mu_prime: f64) -> f64 {
    let m = mu_prime.clamp(0.0, 1.0);
    let h = binary_entropy((1.0 + m) / 2.0).expect("probability in range");
    (symbols as f64 * (bit_depth as f64 - 1.0 + h)).exp2()
}

/// Leading-order average epsilon-entropy `log2(mu / epsilon)`.
pub fn entropy_reference(epsilon: f64, mu: f64) -> Result<f64> {
    if !(epsilon > 0.0 && epsilon < mu) {
        return domain(format!("need 0 < epsilon < mu (got epsilon = {epsilon}, mu = {mu})"));
    }
    Ok((mu / epsilon).log2())
}

/// Exact number of sequences in `A_K^M` with `sum_n q_n >= M mu'`.
pub fn level_sum_count(symbols: usize, bit_depth: u32, mu_prime: f64) -> Result<f64> {
    check_bit_depth(bit_depth)?;
    if bit_depth == 1 {
        let k = threshold_count(symbols as u64, (1.0 + mu_prime) / 2.0);
        let tail = binomial_tail(symbols as u64, k, 0.5)?;
        return Ok(tail * (symbols as f64).exp2());
    }
    // q = (2i - s) / s with s = 2^K - 1; sum q >= M mu' iff sum i >= M s (1 + mu') / 2.
    let steps = (1u64 << bit_depth) - 1;
    let need = {
        let x = symbols as f64 * steps as f64 * (1.0 + mu_prime) / 2.0;
        if (x - x.round()).abs() <= 1e-9 {
            x.round()
        } else {
            x.ceil()
        }
    };
    let max_sum = symbols as u64 * steps;
    let mut counts = vec![0f64; max_sum as usize + 1];
    counts[0] = 1.0;
    for m in 0..symbols as u64 {
        let mut next = vec![0f64; max_sum as usize + 1];
        for (s, &c) in counts.iter().enumerate().take((m * steps) as usize + 1) {
            if c == 0.0 {
                continue;
            }
            for i in 0..=steps as usize {
                next[s + i] += c;
            }
        }
        counts = next;
    }
    Ok(counts
        .iter()
        .enumerate()
        .filter(|(s, _)| *s as f64 >= need)
        .map(|(_, &c)| c)
        .sum())
}

#[derive(Debug, Clone, PartialEq)]
pub struct CountingReport {
    pub symbols: usize,
    pub bit_depth: u32,
    pub lambda: Option<f64>,
    pub threshold: f64,
    pub survivor_count: u64,
    pub total: u64,
    /// Effective amplitude after the budgeted loosening.
    pub mu_prime: f64,
    /// Counting bound at `mu_prime`.
    pub bound_n: f64,
    /// Exact count of the reduced event `sum_n q_n >= M mu_prime`.
    pub bernoulli_bound: f64,
    /// Counting bound with the loosening `sum_n |c_n - 1|` instead of the budget.
    pub bound_measured: f64,
    pub satisfied: bool,
}

struct Pruner<'a> {
    rows: Vec<&'a [f64]>,
    /// `suffix[r][i] = sum_{m >= i} |w_rm|`.
    suffix: Vec<Vec<f64>>,
    levels: &'a [f64],
    threshold: f64,
    len: usize,
    /// `L^(M - i)`.
    block: Vec<u64>,
}

impl Pruner<'_> {
    fn count(&self, i: usize, partial: &mut [f64]) -> u64 {
        let mut all_pass = true;
        for (r, &s) in partial.iter().enumerate() {
            let slack = self.suffix[r][i];
            if s + slack < self.threshold - TIE_TOLERANCE {
                return 0;
            }
            if s - slack < self.threshold - TIE_TOLERANCE {
                all_pass = false;
            }
        }
        if all_pass {
            return self.block[i];
        }
        debug_assert!(i < self.len);
        let mut total = 0;
        for &q in self.levels {
            for (r, p) in partial.iter_mut().enumerate() {
                *p += q * self.rows[r][i];
            }
            total += self.count(i + 1, partial);
            for (r, p) in partial.iter_mut().enumerate() {
                *p -= q * self.rows[r][i];
            }
        }
        total
    }
}

/// Exhaustive survivor count over `A_K^M`, refused when `K M` exceeds
/// [`ENUMERATION_BUDGET`].
pub fn enumerate_survivors(instance: &CountingInstance) -> Result<CountingReport> {
    let m = instance.symbol_count();
    let k = instance.bit_depth;
    if k as u64 * m as u64 > ENUMERATION_BUDGET as u64 {
        return Err(Error::Budget(format!(
            "K M = {} exceeds the enumeration budget {ENUMERATION_BUDGET}",
            k as u64 * m as u64
        )));
    }
    let alphabet: Alphabet = make_alphabet(k)?;
    let levels = alphabet.levels();
    let l = levels.len() as u64;

    let mut rows: Vec<&[f64]> = instance.rows.iter().map(Vec::as_slice).collect();
    rows.sort_by(|a, b| a.iter().zip(*b).map(|(x, y)| x.total_cmp(y)).find(|o| o.is_ne()).unwrap_or(std::cmp::Ordering::Equal));
    rows.dedup();
    let suffix = rows
        .iter()
        .map(|r| {
            let mut s = vec![0.0; m + 1];
            for i in (0..m).rev() {
                s[i] = s[i + 1] + r[i].abs();
            }
            s
        })
        .collect();
    let block: Vec<u64> = (0..=m).map(|i| l.pow((m - i) as u32)).collect();
    let pruner = Pruner {
        rows,
        suffix,
        levels,
        threshold: instance.threshold(),
        len: m,
        block,
    };

    // Parallel over prefixes of up to 8 bits.
    let depth = (0..=m).rev().find(|&d| k as usize * d <= 8).unwrap_or(0);
    let prefixes = l.pow(depth as u32);
    let survivor_count: u64 = (0..prefixes)
        .into_par_iter()
        .map(|code| {
            let mut partial = vec![0.0; pruner.rows.len()];
            let mut c = code;
            for i in (0..depth).rev() {
                let q = levels[(c % l) as usize];
                c /= l;
                for (r, p) in partial.iter_mut().enumerate() {
                    *p += q * pruner.rows[r][i];
                }
            }
            pruner.count(depth, &mut partial)
        })
        .sum();

    let profile = coefficient_profile(instance)?;
    let g = instance.grid_count() as f64;
    let mu_prime = (g * instance.threshold() - profile.budget()) / m as f64;
    let mu_measured = (g * instance.threshold() - profile.total_deviation) / m as f64;
    let bound_n = bound_at(m, k, mu_prime);
    let bernoulli_bound = if mu_prime <= -1.0 {
        (l as f64).powi(m as i32)
    } else {
        level_sum_count(m, k, mu_prime)?
    };
    Ok(CountingReport {
        symbols: m,
        bit_depth: k,
        lambda: instance.lambda,
        threshold: instance.threshold(),
        survivor_count,
        total: l.pow(m as u32),
        mu_prime,
        bound_n,
        bernoulli_bound,
        bound_measured: bound_at(m, k, mu_measured),
        satisfied: survivor_count as f64 <= bernoulli_bound
            && bernoulli_bound <= bound_n * (1.0 + BOUND_SLACK),
    })
}

/// CSV with header `M,K,lambda,threshold,survivors,total,bound_N,satisfied`;
/// the `lambda` field is empty for averaging instances.
pub fn write_reports_csv<W: Write>(reports: &[CountingReport], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["M", "K", "lambda", "threshold", "survivors", "total", "bound_N", "satisfied"])?;
    for r in reports {
        w.write_record([
            r.symbols.to_string(),
            r.bit_depth.to_string(),
            r.lambda.map(fmt_f64).unwrap_or_default(),
            fmt_f64(r.threshold),
            r.survivor_count.to_string(),
            r.total.to_string(),
            fmt_f64(r.bound_n),
            r.satisfied.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Per-unit-length comparison of the net size with the entropy requirement
/// when the error decays like `2^(-alpha K lambda)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExhibitRow {
    pub lambda: f64,
    pub epsilon: f64,
    /// `lambda (K - 1 + h((1 + mu - 5 delta) / 2))`.
    pub net_exponent: f64,
    /// `log2(mu / epsilon)`.
    pub entropy_requirement: f64,
}

impl ExhibitRow {
    /// Positive when the net is too small to be an epsilon-net.
    pub fn gap(&self) -> f64 {
        self.entropy_requirement - self.net_exponent
    }
}

pub fn contradiction_exhibit(
    mu: f64,
    bit_depth: u32,
    alpha: f64,
    delta: f64,
    lambdas: &[f64],
) -> Result<Vec<ExhibitRow>> {
    check_bit_depth(bit_depth)?;
    let reduced = mu - 5.0 * delta;
    if !(0.0..=1.0).contains(&reduced) {
        return domain(format!("mu - 5 delta = {reduced} must lie in [0, 1]"));
    }
    let rate = bit_depth as f64 - 1.0 + binary_entropy((1.0 + reduced) / 2.0)?;
    lambdas
        .iter()
        .map(|&lambda| {
            let epsilon = (-alpha * bit_depth as f64 * lambda).exp2();
            Ok(ExhibitRow {
                lambda,
                epsilon,
                net_exponent: lambda * rate,
                entropy_requirement: entropy_reference(epsilon, mu)?,
            })
        })
        .collect()
}
