//! K-bit alphabets and the encoders that map samples to quantized streams:
//! memoryless PCM rounding and first/second-order Sigma-Delta modulation.
//!
//! All nearest-level decisions break ties toward `+inf`.

use std::io::Write;

use crate::error::{domain, Result};
use crate::numerics::fmt_f64;
use crate::signals::Samples;

/// State bound for the second-order modulator; states are clipped to
/// `[-SECOND_ORDER_CLIP, SECOND_ORDER_CLIP]`.
pub const SECOND_ORDER_CLIP: f64 = 4.0;

/// `2^K` evenly spaced levels from `-1` to `1`.
#[derive(Debug, Clone, PartialEq)]
pub struct Alphabet {
    bit_depth: u32,
    levels: Vec<f64>,
}

pub fn make_alphabet(bit_depth: u32) -> Result<Alphabet> {
    if bit_depth == 0 {
        return domain("bit depth K must be at least 1");
    }
    if bit_depth > 24 {
        return domain(format!("bit depth {bit_depth} is unreasonably large"));
    }
    let steps = (1u64 << bit_depth) - 1;
    let levels = (0..=steps)
        .map(|i| (2 * i as i64 - steps as i64) as f64 / steps as f64)
        .collect();
    Ok(Alphabet { bit_depth, levels })
}

impl Alphabet {
    pub fn bit_depth(&self) -> u32 {
        self.bit_depth
    }

    pub fn levels(&self) -> &[f64] {
        &self.levels
    }

    /// Distance between adjacent levels, `2 / (2^K - 1)`.
    pub fn spacing(&self) -> f64 {
        2.0 / (self.levels.len() - 1) as f64
    }

    pub fn contains(&self, v: f64) -> bool {
        self.levels.iter().any(|&l| l == v)
    }

    /// Index of the level nearest to `v`, ties toward `+inf`, saturating at
    /// the extremes.
    pub fn nearest_index(&self, v: f64) -> usize {
        let steps = (self.levels.len() - 1) as f64;
        // position in units of the spacing, measured from -1
        let pos = (v + 1.0) * steps / 2.0;
        (pos + 0.5).floor().clamp(0.0, steps) as usize
    }

    pub fn nearest(&self, v: f64) -> f64 {
        self.levels[self.nearest_index(v)]
    }
}

/// Read access shared by sample blocks and quantized streams: a finite
/// sequence of coefficients at rate `lambda` starting at index `n_min`.
pub trait SampleSequence {
    fn rate(&self) -> f64;
    fn first_index(&self) -> i64;
    fn coefficients(&self) -> &[f64];

    fn last_index(&self) -> i64 {
        self.first_index() + self.coefficients().len() as i64 - 1
    }
}

impl SampleSequence for Samples {
    fn rate(&self) -> f64 {
        self.lambda
    }
    fn first_index(&self) -> i64 {
        self.n_min
    }
    fn coefficients(&self) -> &[f64] {
        &self.values
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Encoder {
    Pcm,
    SigmaDelta { order: u8 },
}

impl std::fmt::Display for Encoder {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Encoder::Pcm => write!(f, "pcm"),
            Encoder::SigmaDelta { order } => write!(f, "sigma-delta-{order}"),
        }
    }
}

impl Encoder {
    pub fn encode(&self, samples: &Samples, alphabet: &Alphabet) -> Result<QuantizedStream> {
        match *self {
            Encoder::Pcm => Ok(pcm_encode(samples, alphabet)),
            Encoder::SigmaDelta { order } => sigma_delta_encode(samples, alphabet, order, &[]),
        }
    }
}

/// Quantized values `q_n` for `n` in `n_min..`, all drawn from the alphabet.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantizedStream {
    pub lambda: f64,
    pub alphabet: Alphabet,
    pub n_min: i64,
    pub values: Vec<f64>,
    /// Internal modulator state after each step (one column per order);
    /// absent for memoryless encoders.
    pub state_trace: Option<Vec<Vec<f64>>>,
    /// Some input sample had magnitude above 1 and was clamped.
    pub overload: bool,
    /// Number of state clipping events (second-order Sigma-Delta only).
    pub clip_events: usize,
}

impl SampleSequence for QuantizedStream {
    fn rate(&self) -> f64 {
        self.lambda
    }
    fn first_index(&self) -> i64 {
        self.n_min
    }
    fn coefficients(&self) -> &[f64] {
        &self.values
    }
}

impl QuantizedStream {
    /// Stream dump: CSV with header `n,q,u` (one `u` column per modulator
    /// order: `u1,u2` for second order), or `n,q` for memoryless streams.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let order = self
            .state_trace
            .as_ref()
            .and_then(|t| t.first().map(Vec::len))
            .unwrap_or(0);
        let mut header = vec!["n".to_string(), "q".to_string()];
        match order {
            0 => {}
            1 => header.push("u".into()),
            k => header.extend((1..=k).map(|i| format!("u{i}"))),
        }
        w.write_record(&header)?;
        for (i, q) in self.values.iter().enumerate() {
            let mut row = vec![(self.n_min + i as i64).to_string(), fmt_f64(*q)];
            if let Some(trace) = &self.state_trace {
                row.extend(trace[i].iter().map(|&u| fmt_f64(u)));
            }
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Memoryless nearest-level rounding. Samples beyond `[-1, 1]` saturate and
/// set the overload flag.
pub fn pcm_encode(samples: &Samples, alphabet: &Alphabet) -> QuantizedStream {
    let overload = samples.values.iter().any(|v| v.abs() > 1.0);
    let values = samples.values.iter().map(|&v| alphabet.nearest(v)).collect();
    QuantizedStream {
        lambda: samples.lambda,
        alphabet: alphabet.clone(),
        n_min: samples.n_min,
        values,
        state_trace: None,
        overload,
        clip_events: 0,
    }
}

/// Sigma-Delta modulation of the given order.
///
/// * order 1: `q_n = Q(u_{n-1} + x_n)`, `u_n = u_{n-1} + x_n - q_n`;
/// * order 2: `v_n = x_n + 2 u_{n-1} - u_{n-2}`, `q_n = Q(v_n)`,
///   `u_n = v_n - q_n`, so that the second difference of `u` equals
///   `x_n - q_n`. The state is clipped to `[-4, 4]` and clip events counted.
///
/// `initial_state` gives `u_0` (and `u_{-1}` for order 2); missing entries
/// default to zero. The trace records `[u_n]` for order 1 and
/// `[u_n, u_{n-1}]` for order 2.
pub fn sigma_delta_encode(
    samples: &Samples,
    alphabet: &Alphabet,
    order: u8,
    initial_state: &[f64],
) -> Result<QuantizedStream> {
    if !(1..=2).contains(&order) {
        return domain(format!("Sigma-Delta order {order} is not supported (use 1 or 2)"));
    }
    if initial_state.len() > order as usize {
        return domain(format!(
            "order {order} takes at most {order} initial state values, got {}",
            initial_state.len()
        ));
    }
    let init = |i: usize| initial_state.get(i).copied().unwrap_or(0.0);
    let overload = samples.values.iter().any(|v| v.abs() > 1.0);
    let mut values = Vec::with_capacity(samples.values.len());
    let mut trace = Vec::with_capacity(samples.values.len());
    let mut clip_events = 0;

    match order {
        1 => {
            let mut u = init(0);
            for &x in &samples.values {
                let v = u + x;
                let q = alphabet.nearest(v);
                u = v - q;
                values.push(q);
                trace.push(vec![u]);
            }
        }
        _ => {
            let (mut u1, mut u2) = (init(0), init(1));
            for &x in &samples.values {
                let v = x + 2.0 * u1 - u2;
                let q = alphabet.nearest(v);
                let mut u = v - q;
                if u.abs() > SECOND_ORDER_CLIP {
                    u = u.clamp(-SECOND_ORDER_CLIP, SECOND_ORDER_CLIP);
                    clip_events += 1;
                }
                u2 = u1;
                u1 = u;
                values.push(q);
                trace.push(vec![u1, u2]);
            }
        }
    }

    Ok(QuantizedStream {
        lambda: samples.lambda,
        alphabet: alphabet.clone(),
        n_min: samples.n_min,
        values,
        state_trace: Some(trace),
        overload,
        clip_events,
    })
}
