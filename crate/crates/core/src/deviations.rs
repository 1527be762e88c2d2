//! Binomial tails against the Chernoff bound `P(S_n >= na) <= 2^(-n H(a, p))`,
//! and Monte-Carlo tails of sums of general `[0, 1]` variables.
//!
//! A bias `p` given as `f64` is used at its exact binary value, so tails for
//! `n <= 64` are exact rationals rounded once to `f64`. Larger `n` use
//! log-domain summation with relative error below `4 n` ulps.

use std::io::Write;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Distribution as _;
use rayon::prelude::*;

use crate::entropy::relative_entropy;
use crate::error::{domain, Result};
use crate::numerics::fmt_f64;

/// Largest `n` summed in exact rational arithmetic.
pub const EXACT_TAIL_MAX_N: u64 = 64;

/// Slack for the float comparison `exact <= chernoff`.
pub const DOMINANCE_SLACK: f64 = 1e-15;

/// Minimum Monte-Carlo trial count.
pub const MIN_TRIALS: u64 = 1000;

const MC_CHUNK: u64 = 1 << 14;

fn check_bias(p: f64) -> Result<()> {
    if !(p > 0.0 && p < 1.0) {
        return domain(format!("bias p = {p} must lie strictly inside (0, 1)"));
    }
    Ok(())
}

fn exact_rational(p: f64) -> BigRational {
    BigRational::from_float(p).expect("finite bias")
}

/// `C(n, j)` for `j = 0..=n`.
fn binomial_row(n: u64) -> Vec<BigInt> {
    let mut row = Vec::with_capacity(n as usize + 1);
    let mut c = BigInt::one();
    row.push(c.clone());
    for j in 0..n {
        c = c * BigInt::from(n - j) / BigInt::from(j + 1);
        row.push(c.clone());
    }
    row
}

/// Exact `sum_{j in js} C(n, j) p^j (1 - p)^(n - j)`, accumulated over the
/// common denominator `d^n` where `p = P / d`.
fn binomial_mass_rational(n: u64, js: std::ops::Range<u64>, p: &BigRational) -> BigRational {
    if js.is_empty() {
        return BigRational::zero();
    }
    let d = p.denom().clone();
    let pn = p.numer().clone();
    let qn = &d - &pn;
    let row = binomial_row(n);
    let mut p_pows = vec![BigInt::one()];
    let mut q_pows = vec![BigInt::one()];
    for _ in 0..n {
        p_pows.push(p_pows.last().unwrap() * &pn);
        q_pows.push(q_pows.last().unwrap() * &qn);
    }
    let mut acc = BigInt::zero();
    for j in js {
        acc += &row[j as usize] * &p_pows[j as usize] * &q_pows[(n - j) as usize];
    }
    BigRational::new(acc, num_traits::pow(d, n as usize))
}

/// Exact `P(S_n >= k)` for `S_n ~ Binomial(n, p)` with rational `p` in `(0, 1)`.
pub fn binomial_tail_rational(n: u64, k: i64, p: &BigRational) -> BigRational {
    if k <= 0 {
        return BigRational::one();
    }
    let k = k as u64;
    if k > n {
        return BigRational::zero();
    }
    binomial_mass_rational(n, k..n + 1, p)
}

/// Exact `P(S_n < k)`, the complement of [`binomial_tail_rational`].
pub fn binomial_strict_head(n: u64, k: i64, p: &BigRational) -> BigRational {
    if k <= 0 {
        return BigRational::zero();
    }
    let k = (k as u64).min(n + 1);
    binomial_mass_rational(n, 0..k, p)
}

fn log_domain_tail(n: u64, k: u64, p: f64) -> f64 {
    let (lp, lq) = (p.ln(), (-p).ln_1p());
    // ln C(n, j) accumulated from j = k.
    let mut lc = 0.0;
    for j in 0..k {
        lc += ((n - j) as f64).ln() - ((j + 1) as f64).ln();
    }
    let mut logs = Vec::with_capacity((n - k + 1) as usize);
    for j in k..=n {
        logs.push(lc + j as f64 * lp + (n - j) as f64 * lq);
        if j < n {
            lc += ((n - j) as f64).ln() - ((j + 1) as f64).ln();
        }
    }
    let m = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let s: f64 = logs.iter().map(|l| (l - m).exp()).sum();
    (m + s.ln()).exp().min(1.0)
}

/// `P(S_n >= k)` for `S_n ~ Binomial(n, p)`; `k > n` gives 0 and `k <= 0` gives 1.
pub fn binomial_tail(n: u64, k: i64, p: f64) -> Result<f64> {
    check_bias(p)?;
    if k <= 0 {
        return Ok(1.0);
    }
    if k as u64 > n {
        return Ok(0.0);
    }
    if n <= EXACT_TAIL_MAX_N {
        let t = binomial_tail_rational(n, k, &exact_rational(p));
        Ok(t.to_f64().expect("probability fits in f64"))
    } else {
        Ok(log_domain_tail(n, k as u64, p))
    }
}

/// `2^(-n H(a, p))` for `p < a <= 1`.
pub fn chernoff_bound(n: u64, a: f64, p: f64) -> Result<f64> {
    check_bias(p)?;
    if !(a > p && a <= 1.0) {
        return domain(format!("need p < a <= 1 (got a = {a}, p = {p})"));
    }
    Ok((-(n as f64) * relative_entropy(a, p)?).exp2())
}

/// `ceil(n a)`, treating products within `1e-9` of an integer as that integer
/// so that decimal grid values such as `a = 0.8` count as intended.
pub fn threshold_count(n: u64, a: f64) -> i64 {
    let x = n as f64 * a;
    let r = x.round();
    if (x - r).abs() <= 1e-9 {
        r as i64
    } else {
        x.ceil() as i64
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailBoundRecord {
    pub n: u64,
    pub a: f64,
    pub p: f64,
    pub exact_tail: f64,
    pub chernoff: f64,
    pub satisfied: bool,
}

/// Exact tails against the Chernoff bound for every `n in 1..=n_max` and
/// every grid pair with `p < a <= 1`; other pairs are skipped.
pub fn verify_prop1(n_max: u64, p_grid: &[f64], a_grid: &[f64]) -> Result<Vec<TailBoundRecord>> {
    for &p in p_grid {
        check_bias(p)?;
    }
    let pairs: Vec<(f64, f64)> = p_grid
        .iter()
        .flat_map(|&p| a_grid.iter().filter(move |&&a| a > p && a <= 1.0).map(move |&a| (p, a)))
        .collect();
    let tasks: Vec<(u64, f64, f64)> = (1..=n_max)
        .flat_map(|n| pairs.iter().map(move |&(p, a)| (n, p, a)))
        .collect();
    tasks
        .par_iter()
        .map(|&(n, p, a)| {
            let exact_tail = binomial_tail(n, threshold_count(n, a), p)?;
            let chernoff = chernoff_bound(n, a, p)?;
            Ok(TailBoundRecord {
                n,
                a,
                p,
                exact_tail,
                chernoff,
                satisfied: exact_tail <= chernoff + DOMINANCE_SLACK,
            })
        })
        .collect()
}

/// CSV with header `n,a,p,exact,chernoff,satisfied`.
pub fn write_prop1_csv<W: Write>(records: &[TailBoundRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["n", "a", "p", "exact", "chernoff", "satisfied"])?;
    for r in records {
        w.write_record([
            r.n.to_string(),
            fmt_f64(r.a),
            fmt_f64(r.p),
            fmt_f64(r.exact_tail),
            fmt_f64(r.chernoff),
            r.satisfied.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Laws on `[0, 1]` for the Monte-Carlo tails.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum UnitLaw {
    Uniform,
    PointMass(f64),
    Bernoulli(f64),
    Beta { alpha: f64, beta: f64 },
    /// Uniform on `{0, 1/(levels-1), ..., 1}`.
    DiscreteUniform { levels: u32 },
}

impl std::fmt::Display for UnitLaw {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            UnitLaw::Uniform => write!(f, "uniform"),
            UnitLaw::PointMass(p) => write!(f, "point({p})"),
            UnitLaw::Bernoulli(p) => write!(f, "bernoulli({p})"),
            UnitLaw::Beta { alpha, beta } => write!(f, "beta({alpha};{beta})"),
            UnitLaw::DiscreteUniform { levels } => write!(f, "discrete({levels})"),
        }
    }
}

enum Sampler {
    Uniform,
    Point(f64),
    Bernoulli(f64),
    Beta(rand_distr::Beta<f64>),
    Discrete(u32),
}

impl Sampler {
    fn draw(&self, rng: &mut ChaCha8Rng) -> f64 {
        match self {
            Sampler::Uniform => rng.random::<f64>(),
            Sampler::Point(p) => *p,
            Sampler::Bernoulli(p) => {
                if rng.random::<f64>() < *p {
                    1.0
                } else {
                    0.0
                }
            }
            Sampler::Beta(b) => b.sample(rng),
            Sampler::Discrete(levels) => rng.random_range(0..*levels) as f64 / (*levels - 1) as f64,
        }
    }
}

impl UnitLaw {
    pub fn mean(&self) -> f64 {
        match *self {
            UnitLaw::Uniform | UnitLaw::DiscreteUniform { .. } => 0.5,
            UnitLaw::PointMass(p) | UnitLaw::Bernoulli(p) => p,
            UnitLaw::Beta { alpha, beta } => alpha / (alpha + beta),
        }
    }

    fn sampler(&self) -> Result<Sampler> {
        Ok(match *self {
            UnitLaw::Uniform => Sampler::Uniform,
            UnitLaw::PointMass(p) => {
                if !(0.0..=1.0).contains(&p) {
                    return domain(format!("point mass at {p} is outside [0, 1]"));
                }
                Sampler::Point(p)
            }
            UnitLaw::Bernoulli(p) => {
                if !(0.0..=1.0).contains(&p) {
                    return domain(format!("Bernoulli parameter {p} is outside [0, 1]"));
                }
                Sampler::Bernoulli(p)
            }
            UnitLaw::Beta { alpha, beta } => match rand_distr::Beta::new(alpha, beta) {
                Ok(b) => Sampler::Beta(b),
                Err(e) => return domain(format!("beta({alpha}, {beta}): {e}")),
            },
            UnitLaw::DiscreteUniform { levels } => {
                if levels < 2 {
                    return domain("a discrete uniform law needs at least 2 levels");
                }
                Sampler::Discrete(levels)
            }
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailEstimate {
    pub estimate: f64,
    pub std_error: f64,
    pub hits: u64,
    pub trials: u64,
}

/// Monte-Carlo estimate of `P(X_1 + ... + X_n >= n a)` for i.i.d. `X_j`.
///
/// Trials are split into chunks of 16384; chunk `c` draws from ChaCha8 seeded
/// with `seed` on stream `c`, so the result does not depend on scheduling.
pub fn mc_tail(law: &UnitLaw, n: u64, a: f64, trials: u64, seed: u64) -> Result<TailEstimate> {
    if trials < MIN_TRIALS {
        return domain(format!("{trials} trials is below the minimum of {MIN_TRIALS}"));
    }
    if n == 0 {
        return domain("sum length n must be positive");
    }
    let sampler = law.sampler()?;
    let target = n as f64 * a;
    let chunks = trials.div_ceil(MC_CHUNK);
    let hits: u64 = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(c);
            let len = MC_CHUNK.min(trials - c * MC_CHUNK);
            let mut hits = 0u64;
            for _ in 0..len {
                let s: f64 = (0..n).map(|_| sampler.draw(&mut rng)).sum();
                if s >= target {
                    hits += 1;
                }
            }
            hits
        })
        .sum();
    let estimate = hits as f64 / trials as f64;
    Ok(TailEstimate {
        estimate,
        std_error: (estimate * (1.0 - estimate) / trials as f64).sqrt(),
        hits,
        trials,
    })
}

/// Monte-Carlo tail of a general law next to the Bernoulli tail and Chernoff
/// bound at the same mean.
#[derive(Debug, Clone, PartialEq)]
pub struct OrderingRecord {
    pub law: String,
    pub n: u64,
    pub a: f64,
    pub p: f64,
    pub estimate: f64,
    pub std_error: f64,
    pub bernoulli: f64,
    pub chernoff: f64,
    /// `estimate <= bernoulli + 3 std_error`.
    pub satisfied: bool,
}

/// Runs [`mc_tail`] for every law, `n` and `a` above the law's mean. The
/// seed of each cell is `seed + index` in iteration order.
pub fn verify_prop2(
    laws: &[UnitLaw],
    n_grid: &[u64],
    a_grid: &[f64],
    trials: u64,
    seed: u64,
) -> Result<Vec<OrderingRecord>> {
    let mut out = Vec::new();
    let mut cell = 0u64;
    for law in laws {
        let p = law.mean();
        check_bias(p)?;
        for &n in n_grid {
            for &a in a_grid.iter().filter(|&&a| a > p && a <= 1.0) {
                let mc = mc_tail(law, n, a, trials, seed.wrapping_add(cell))?;
                cell += 1;
                let bernoulli = binomial_tail(n, threshold_count(n, a), p)?;
                out.push(OrderingRecord {
                    law: law.to_string(),
                    n,
                    a,
                    p,
                    estimate: mc.estimate,
                    std_error: mc.std_error,
                    bernoulli,
                    chernoff: chernoff_bound(n, a, p)?,
                    satisfied: mc.estimate <= bernoulli + 3.0 * mc.std_error,
                });
            }
        }
    }
    Ok(out)
}

/// CSV with header `law,n,a,p,estimate,std_error,bernoulli,chernoff,satisfied`.
pub fn write_prop2_csv<W: Write>(records: &[OrderingRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["law", "n", "a", "p", "estimate", "std_error", "bernoulli", "chernoff", "satisfied"])?;
    for r in records {
        w.write_record([
            r.law.clone(),
            r.n.to_string(),
            fmt_f64(r.a),
            fmt_f64(r.p),
            fmt_f64(r.estimate),
            fmt_f64(r.std_error),
            fmt_f64(r.bernoulli),
            fmt_f64(r.chernoff),
            r.satisfied.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
