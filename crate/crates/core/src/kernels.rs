//! Reconstruction kernels `phi` with `int phi = 1`, their tail envelopes
//! `rho` (even, nonincreasing on `[0, inf)`, `rho >= |phi|`), the padding
//! margin `T0(lambda)` and Poisson row sums.
//!
//! Three families are provided:
//!
//! * centered cardinal B-splines of order `m` (piecewise polynomials of degree
//!   `m - 1`, compact support of radius `m * scale / 2`);
//! * a truncated low-pass kernel whose Fourier transform is 1 on the signal
//!   band `|omega| <= 1/2`, 0 for `|omega| >= lambda0 / 2`, with a Kaiser-Bessel
//!   taper in between;
//! * the two-sided exponential `phi(t) = exp(-|t|) / 2` with envelope
//!   `rho(s) = exp(-|s|)`, whose tail integral has a closed form.

use std::f64::consts::PI;
use std::fmt;
use std::io::Write;

use crate::error::{domain, Error, Result};
use crate::numerics::{fmt_f64, grid, integrate};

/// Bisection tolerance on `T0`.
pub const T0_TOLERANCE: f64 = 1e-9;

/// Row sums whose dropped tail may exceed this are flagged.
pub const ROW_WINDOW_TOLERANCE: f64 = 1e-12;

/// Largest discarded mass accepted when truncating the low-pass kernel.
pub const LOWPASS_MAX_DISCARDED: f64 = 1e-9;

/// Kaiser-Bessel shape parameter of the low-pass transition band. Time-domain
/// sidelobes beyond the main decay region sit near `exp(-beta)` relative to
/// the peak.
pub const LOWPASS_BETA: f64 = 30.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Support {
    Compact(f64),
    Unbounded,
}

/// Centered cardinal B-spline `M_m`, evaluated by the Cox-de Boor recursion
/// on the integer knots of `[-m/2, m/2]`. Symmetric by construction.
pub fn cardinal_bspline(order: u32, x: f64) -> f64 {
    let m = order as usize;
    let y = x.abs() + m as f64 / 2.0;
    if m == 0 || y >= m as f64 {
        return 0.0;
    }
    let cell = y.floor() as usize;
    // basis[i] holds N_{i,k}(y) for the current degree k - 1.
    let mut basis = vec![0.0; m + 1];
    basis[cell] = 1.0;
    for k in 2..=m {
        let kf = (k - 1) as f64;
        for i in 0..=(m - k) {
            let left = (y - i as f64) * basis[i];
            let right = (i as f64 + k as f64 - y) * basis[i + 1];
            basis[i] = (left + right) / kf;
        }
        for b in basis.iter_mut().skip(m - k + 1) {
            *b = 0.0;
        }
    }
    basis[0]
}

/// `int_{-inf}^{x} M_m`, from the identity
/// `CDF_m(x) = sum_{k >= 0} M_{m+1}(x - 1/2 - k)`.
pub fn cardinal_bspline_cdf(order: u32, x: f64) -> f64 {
    let half = order as f64 / 2.0;
    if x <= -half {
        return 0.0;
    }
    if x >= half {
        return 1.0;
    }
    let upper = (x - 0.5 + (order as f64 + 1.0) / 2.0).floor().max(0.0) as usize;
    (0..=upper)
        .map(|k| cardinal_bspline(order + 1, x - 0.5 - k as f64))
        .sum::<f64>()
        .min(1.0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BSpline {
    order: u32,
    scale: f64,
}

impl BSpline {
    fn eval(&self, t: f64) -> f64 {
        cardinal_bspline(self.order, t / self.scale) / self.scale
    }

    fn radius(&self) -> f64 {
        self.order as f64 * self.scale / 2.0
    }

    fn tail(&self, t: f64) -> f64 {
        if t >= 0.0 {
            cardinal_bspline_cdf(self.order, -t / self.scale)
        } else {
            1.0 - cardinal_bspline_cdf(self.order, t / self.scale)
        }
    }

    fn integral(&self) -> f64 {
        // Exact on each knot interval: 16-point Gauss-Legendre integrates
        // polynomials up to degree 31.
        let r = self.radius();
        (0..self.order)
            .map(|k| {
                let lo = -r + k as f64 * self.scale;
                integrate(lo, lo + self.scale, 1, |t| self.eval(t))
            })
            .sum()
    }
}

/// `sinh(sqrt(s)) / sqrt(s)` continued analytically to `sin(sqrt(-s)) / sqrt(-s)`.
fn sinhc_sqrt(s: f64) -> f64 {
    if s.abs() < 1e-4 {
        1.0 + s / 6.0 * (1.0 + s / 20.0 * (1.0 + s / 42.0))
    } else if s > 0.0 {
        let r = s.sqrt();
        r.sinh() / r
    } else {
        let r = (-s).sqrt();
        r.sin() / r
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LowPass {
    lambda0: f64,
    radius: f64,
    /// Center of the plateau-plus-taper rectangle, `(1 + lambda0) / 4`.
    center: f64,
    /// Width of the transition band, `(lambda0 - 1) / 2`.
    width: f64,
    beta: f64,
    kaiser_peak: f64,
    norm: f64,
    discarded: f64,
    /// Break points of the envelope's tail integral table and the value of
    /// `int_{b_i}^{R} rho` at each.
    tail_knots: Vec<f64>,
    tail_values: Vec<f64>,
}

impl LowPass {
    /// Untruncated, unnormalized time response
    /// `g(t) = sin(2 pi c t) / (pi t) * kaiser(t)`.
    fn raw(&self, t: f64) -> f64 {
        let sinc_part = if t.abs() < 1e-12 {
            2.0 * self.center
        } else {
            (2.0 * PI * self.center * t).sin() / (PI * t)
        };
        sinc_part * self.kaiser(t)
    }

    /// Fourier transform of the Kaiser-Bessel taper, normalized to 1 at 0.
    fn kaiser(&self, t: f64) -> f64 {
        let xi = PI * self.width * t;
        sinhc_sqrt(self.beta * self.beta - xi * xi) / self.kaiser_peak
    }

    /// Nonincreasing majorant of `|kaiser|` on `[0, inf)`.
    fn kaiser_envelope(&self, s: f64) -> f64 {
        let xi = PI * self.width * s;
        if xi <= self.beta {
            sinhc_sqrt(self.beta * self.beta - xi * xi) / self.kaiser_peak
        } else {
            let z = (xi * xi - self.beta * self.beta).sqrt();
            (1.0f64).min(1.0 / z) / self.kaiser_peak
        }
    }

    fn eval(&self, t: f64) -> f64 {
        if t.abs() > self.radius {
            0.0
        } else {
            self.raw(t) / self.norm
        }
    }

    fn envelope(&self, s: f64) -> f64 {
        let s = s.abs();
        if s > self.radius {
            return 0.0;
        }
        let sinc_bound = if s == 0.0 {
            2.0 * self.center
        } else {
            (2.0 * self.center).min(1.0 / (PI * s))
        };
        sinc_bound * self.kaiser_envelope(s) / self.norm
    }

    fn tail_from(&self, t: f64) -> f64 {
        if t >= self.radius {
            return 0.0;
        }
        let i = self.tail_knots.partition_point(|&k| k <= t);
        // t lies in [knots[i - 1], knots[i])
        let next = self.tail_knots[i];
        self.tail_values[i] + integrate(t, next, 1, |s| self.envelope(s))
    }

    fn tail(&self, t: f64) -> f64 {
        if t >= 0.0 {
            self.tail_from(t)
        } else {
            2.0 * self.tail_values[0] - self.tail_from(-t)
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Kernel {
    BSpline(BSpline),
    LowPass(LowPass),
    Exponential,
}

impl fmt::Display for Kernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Kernel::BSpline(b) => write!(f, "bspline(order={},scale={})", b.order, b.scale),
            Kernel::LowPass(l) => write!(f, "lowpass(lambda0={},radius={})", l.lambda0, l.radius),
            Kernel::Exponential => write!(f, "exponential"),
        }
    }
}

/// Compactly supported, `C^2` B-spline kernel of the given order, dilated by
/// `scale` and normalized to unit integral.
pub fn make_bspline_kernel(order: u32, scale: f64) -> Result<Kernel> {
    if order < 3 {
        return domain(format!(
            "B-spline order {order} is below 3; the kernel would not be twice continuously differentiable"
        ));
    }
    Kernel::bspline(order, scale)
}

/// Truncated low-pass kernel: `hat g = 1` on `|omega| <= 1/2`, `0` for
/// `|omega| >= lambda0 / 2`, cut off at `|t| = truncation_radius` and
/// renormalized. Fails when the discarded mass exceeds
/// [`LOWPASS_MAX_DISCARDED`].
pub fn make_lowpass_kernel(lambda0: f64, truncation_radius: f64) -> Result<Kernel> {
    if !(lambda0 > 1.0) || !lambda0.is_finite() {
        return domain(format!("transition parameter lambda0 = {lambda0} must exceed 1"));
    }
    if !(truncation_radius > 0.0) || !truncation_radius.is_finite() {
        return domain(format!("truncation radius {truncation_radius} must be positive"));
    }
    let beta = LOWPASS_BETA;
    let mut lp = LowPass {
        lambda0,
        radius: truncation_radius,
        center: (1.0 + lambda0) / 4.0,
        width: (lambda0 - 1.0) / 2.0,
        beta,
        kaiser_peak: sinhc_sqrt(beta * beta),
        norm: 1.0,
        discarded: 0.0,
        tail_knots: Vec::new(),
        tail_values: Vec::new(),
    };

    let panels = |len: f64| (len / 0.05).ceil().max(1.0) as usize;
    let r = truncation_radius;
    let kept = 2.0 * integrate(0.0, r, panels(r), |t| lp.raw(t));

    // Mass beyond the radius: numerically out to where the Kaiser factor is
    // in its oscillatory regime with xi >= 2 beta, then the analytic bound
    // |g(t)| <= (2 / sqrt 3) beta / (sinh(beta) pi^2 w t^2) past that point.
    let far = (2.0 * 2.0 * beta / (PI * lp.width)).max(2.0 * r);
    let near_tail = integrate(r, far, panels(far - r) * 2, |t| lp.raw(t).abs());
    let far_tail = 2.0 / 3f64.sqrt() / (PI * PI * lp.width * far * lp.kaiser_peak);
    let discarded = 2.0 * (near_tail + far_tail) / kept;
    if discarded >= LOWPASS_MAX_DISCARDED {
        return domain(format!(
            "truncation radius {r} discards mass {discarded:.3e} >= {LOWPASS_MAX_DISCARDED:e}; increase it"
        ));
    }
    lp.norm = kept;
    lp.discarded = discarded;

    // Envelope tail table. Kinks of the envelope are used as knots so each
    // cell integrand is smooth.
    let mut knots = grid(0.0, r, 0.01);
    for kink in [
        1.0 / (2.0 * PI * lp.center),
        beta / (PI * lp.width),
        (beta * beta + 1.0).sqrt() / (PI * lp.width),
    ] {
        if kink > 0.0 && kink < r {
            knots.push(kink);
        }
    }
    knots.sort_by(f64::total_cmp);
    knots.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
    let mut values = vec![0.0; knots.len()];
    for i in (0..knots.len() - 1).rev() {
        values[i] = values[i + 1] + integrate(knots[i], knots[i + 1], 1, |s| lp.envelope(s));
    }
    lp.tail_knots = knots;
    lp.tail_values = values;
    Ok(Kernel::LowPass(lp))
}

impl Kernel {
    /// B-spline of any order `>= 1`. Orders 1 and 2 are not smooth enough for
    /// the rate bound but are handy as exact partitions of unity.
    pub fn bspline(order: u32, scale: f64) -> Result<Kernel> {
        if order == 0 {
            return domain("B-spline order must be at least 1");
        }
        if !(scale > 0.0) || !scale.is_finite() {
            return domain(format!("B-spline scale {scale} must be positive"));
        }
        Ok(Kernel::BSpline(BSpline { order, scale }))
    }

    /// Order-2 B-spline (hat function) of half-width `scale`.
    pub fn triangle(scale: f64) -> Result<Kernel> {
        Kernel::bspline(2, scale)
    }

    /// `phi(t) = exp(-|t|) / 2`, enveloped by `rho(s) = exp(-|s|)`.
    pub fn exponential() -> Kernel {
        Kernel::Exponential
    }

    pub fn eval(&self, t: f64) -> f64 {
        match self {
            Kernel::BSpline(b) => b.eval(t),
            Kernel::LowPass(l) => l.eval(t),
            Kernel::Exponential => 0.5 * (-t.abs()).exp(),
        }
    }

    /// Tail envelope `rho(s)`.
    pub fn envelope(&self, s: f64) -> f64 {
        match self {
            Kernel::BSpline(b) => b.eval(s.abs()),
            Kernel::LowPass(l) => l.envelope(s),
            Kernel::Exponential => (-s.abs()).exp(),
        }
    }

    /// `int_T^inf rho(s) ds`, for any real `T`.
    pub fn tail_integral(&self, t: f64) -> f64 {
        match self {
            Kernel::BSpline(b) => b.tail(t),
            Kernel::LowPass(l) => l.tail(t),
            Kernel::Exponential => {
                if t >= 0.0 {
                    (-t).exp()
                } else {
                    2.0 - t.exp()
                }
            }
        }
    }

    /// `||rho||_1`.
    pub fn envelope_l1(&self) -> f64 {
        2.0 * self.tail_integral(0.0)
    }

    pub fn support(&self) -> Support {
        match self {
            Kernel::BSpline(b) => Support::Compact(b.radius()),
            Kernel::LowPass(l) => Support::Compact(l.radius),
            Kernel::Exponential => Support::Unbounded,
        }
    }

    /// Radius beyond which the envelope tail integral is at most `eps`.
    pub fn effective_radius(&self, eps: f64) -> f64 {
        match self.support() {
            Support::Compact(r) => r,
            Support::Unbounded => {
                let mut hi = 1.0;
                while self.tail_integral(hi) > eps {
                    hi *= 2.0;
                }
                hi
            }
        }
    }

    /// Mass removed by truncation, relative to the untruncated kernel; zero
    /// for kernels that are not truncated.
    pub fn discarded_mass(&self) -> f64 {
        match self {
            Kernel::LowPass(l) => l.discarded,
            _ => 0.0,
        }
    }

    /// Numerical `int phi`.
    pub fn normalization_check(&self) -> f64 {
        match self {
            Kernel::BSpline(b) => b.integral(),
            Kernel::LowPass(l) => {
                let panels = (l.radius / 0.05).ceil() as usize;
                2.0 * integrate(0.0, l.radius, panels, |t| l.eval(t))
            }
            Kernel::Exponential => {
                let r = 60.0;
                2.0 * integrate(0.0, r, 600, |t| self.eval(t)) + (-r).exp()
            }
        }
    }

    /// Numerical Fourier transform `hat phi(omega) = int phi(t) exp(-2 pi i omega t) dt`
    /// (real, since every kernel here is even).
    pub fn fourier_transform(&self, omega: f64) -> f64 {
        let r = self.effective_radius(1e-17);
        let cycles = r * (omega.abs() + 2.0);
        let panels = ((r / 0.05).max(cycles * 4.0)).ceil() as usize;
        match self {
            Kernel::BSpline(b) => {
                // one panel per knot interval keeps the polynomial pieces intact
                let per_cell = (panels / b.order as usize).max(1);
                (0..b.order)
                    .map(|k| {
                        let lo = -r + k as f64 * b.scale;
                        integrate(lo, lo + b.scale, per_cell, |t| {
                            self.eval(t) * (2.0 * PI * omega * t).cos()
                        })
                    })
                    .sum()
            }
            _ => 2.0 * integrate(0.0, r, panels, |t| self.eval(t) * (2.0 * PI * omega * t).cos()),
        }
    }

    /// Descriptor sidecar: CSV with header `t,phi(t)` on a reference grid.
    pub fn write_descriptor<W: Write>(&self, out: W, t0: f64, t1: f64, step: f64) -> Result<()> {
        if !(t1 > t0) || !(step > 0.0) {
            return domain("descriptor grid needs t1 > t0 and step > 0");
        }
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["t", "phi(t)"])?;
        for t in grid(t0, t1, step) {
            w.write_record([fmt_f64(t), fmt_f64(self.eval(t))])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Smallest `T0` with `int_{T0 - 1/lambda}^inf rho <= 2^(-alpha K lambda)`,
/// located by bracketing and bisection to [`T0_TOLERANCE`].
pub fn compute_t0(kernel: &Kernel, alpha: f64, bit_depth: u32, lambda: f64) -> Result<f64> {
    if !(alpha > 0.0) || !alpha.is_finite() {
        return domain(format!("rate constant alpha = {alpha} must be positive"));
    }
    if bit_depth == 0 {
        return domain("bit depth K must be at least 1");
    }
    if !(lambda > 1.0) || !lambda.is_finite() {
        return domain(format!("rate lambda = {lambda} must exceed 1"));
    }
    let target = (-alpha * bit_depth as f64 * lambda).exp2();
    if target == 0.0 && kernel.support() == Support::Unbounded {
        return Err(Error::Unreachable(format!(
            "target 2^(-{}) underflows and the envelope of {kernel} never vanishes",
            alpha * bit_depth as f64 * lambda
        )));
    }
    let shift = 1.0 / lambda;
    let ok = |t: f64| kernel.tail_integral(t - shift) <= target;

    let mut lo = 0.0;
    while ok(lo) {
        lo = 2.0 * lo - 1.0;
        if lo < -1e6 {
            return Err(Error::Unreachable(format!(
                "envelope of {kernel} has total mass below the target {target:e}"
            )));
        }
    }
    let mut hi = lo.max(0.0) + 1.0;
    while !ok(hi) {
        hi = 2.0 * hi + 1.0;
        if hi > 1e6 {
            return Err(Error::Unreachable(format!(
                "tail integral of {kernel} stays above {target:e}"
            )));
        }
    }
    while hi - lo > T0_TOLERANCE {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if ok(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RowSum {
    pub sum: f64,
    /// `|sum - 1|`.
    pub deviation: f64,
    /// Envelope bound on the part of the full row sum lying outside the window.
    pub dropped_bound: f64,
    /// Set when `dropped_bound` exceeds [`ROW_WINDOW_TOLERANCE`].
    pub window_too_narrow: bool,
}

/// `(1/lambda) sum_{j in j_min..=j_max} phi((j - n) / lambda)`.
pub fn poisson_row_sum(kernel: &Kernel, lambda: f64, n: i64, j_min: i64, j_max: i64) -> Result<RowSum> {
    if !(lambda > 0.0) || !lambda.is_finite() {
        return domain(format!("rate lambda = {lambda} must be positive"));
    }
    if j_max < j_min {
        return domain(format!("empty index window [{j_min}, {j_max}]"));
    }
    let sum = (j_min..=j_max)
        .map(|j| kernel.eval((j - n) as f64 / lambda))
        .sum::<f64>()
        / lambda;
    // Nearest dropped offsets on each side; by monotonicity of rho the dropped
    // Riemann sum on one side is at most int_{d - 1/lambda}^inf rho.
    let left = (n - j_min + 1) as f64 / lambda;
    let right = (j_max + 1 - n) as f64 / lambda;
    let dropped_bound =
        kernel.tail_integral(left - 1.0 / lambda) + kernel.tail_integral(right - 1.0 / lambda);
    Ok(RowSum {
        sum,
        deviation: (sum - 1.0).abs(),
        dropped_bound,
        window_too_narrow: dropped_bound > ROW_WINDOW_TOLERANCE,
    })
}

/// Index window `[n - J, n + J]` that covers the kernel support (or its
/// effective radius at `1e-17`) around `n`.
pub fn full_row_window(kernel: &Kernel, lambda: f64, n: i64) -> (i64, i64) {
    let r = kernel.effective_radius(1e-17);
    let reach = (r * lambda).ceil() as i64 + 1;
    (n - reach, n + reach)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Truncated-power form of the centered cardinal B-spline, independent of
    /// the recursion used by the kernel.
    fn bspline_oracle(m: u32, x: f64) -> f64 {
        let y = x + m as f64 / 2.0;
        let mut acc = 0.0;
        let mut binom = 1.0;
        for k in 0..=m {
            let u = y - k as f64;
            if u > 0.0 {
                let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
                acc += sign * binom * u.powi(m as i32 - 1);
            }
            binom = binom * (m - k) as f64 / (k + 1) as f64;
        }
        let fact: f64 = (1..m).map(|i| i as f64).product();
        acc / fact
    }

    #[test]
    fn bspline_matches_truncated_power_oracle() {
        for m in 1..=6 {
            for i in -400..=400 {
                let x = i as f64 * 0.01 + 0.003;
                let d = cardinal_bspline(m, x) - bspline_oracle(m, x);
                assert!(d.abs() < 1e-12, "order {m} at {x}: {d}");
            }
        }
    }

    #[test]
    fn order_three_unit_scale() {
        let k = make_bspline_kernel(3, 1.0).unwrap();
        assert_eq!(k.support(), Support::Compact(1.5));
        assert!((k.eval(0.0) - 0.75).abs() < 1e-15);
        assert!((k.eval(1.0) - 0.125).abs() < 1e-15);
        assert_eq!(k.eval(1.5), 0.0);
        assert_eq!(k.tail_integral(1.5), 0.0);
        assert_eq!(k.tail_integral(7.0), 0.0);
    }

    #[test]
    fn order_below_three_rejected() {
        assert!(make_bspline_kernel(2, 1.0).is_err());
        assert!(make_bspline_kernel(3, 0.0).is_err());
        assert!(Kernel::triangle(1.0).is_ok());
    }

    #[test]
    fn bspline_cdf_matches_quadrature() {
        for m in 2..=5 {
            let k = Kernel::bspline(m, 0.7).unwrap();
            for i in -30..=30 {
                let t = i as f64 * 0.07;
                let oracle = if t >= 0.0 {
                    integrate(t, 0.7 * m as f64 / 2.0 + 1e-9, 400, |s| k.eval(s))
                } else {
                    0.5 + integrate(t, 0.0, 400, |s| k.eval(s))
                };
                let d = k.tail_integral(t) - oracle;
                assert!(d.abs() < 1e-6, "m={m} t={t} d={d}");
            }
        }
    }

    #[test]
    fn kernels_are_normalized() {
        let kernels = [
            make_bspline_kernel(3, 1.0).unwrap(),
            make_bspline_kernel(4, 0.6).unwrap(),
            make_lowpass_kernel(2.0, 20.0).unwrap(),
            make_lowpass_kernel(3.0, 12.0).unwrap(),
            Kernel::exponential(),
        ];
        for k in &kernels {
            let n = k.normalization_check();
            assert!((n - 1.0).abs() <= 1e-8, "{k}: {n}");
        }
    }

    #[test]
    fn envelopes_dominate_and_decrease() {
        let kernels = [
            make_bspline_kernel(3, 1.0).unwrap(),
            make_lowpass_kernel(2.0, 20.0).unwrap(),
            Kernel::exponential(),
        ];
        for k in &kernels {
            let r = k.effective_radius(1e-12) * 1.1;
            let mut prev = f64::INFINITY;
            for i in 0..10_000 {
                let t = -r + 2.0 * r * i as f64 / 9_999.0;
                assert!(k.envelope(t.abs()) - k.eval(t).abs() >= -1e-12, "{k} at {t}");
                assert_eq!(k.envelope(t), k.envelope(-t));
            }
            for i in 0..10_000 {
                let s = r * i as f64 / 9_999.0;
                let e = k.envelope(s);
                assert!(e <= prev, "{k} envelope increases at {s}");
                prev = e;
            }
        }
    }

    #[test]
    fn lowpass_tail_integral_matches_quadrature() {
        let k = make_lowpass_kernel(2.0, 20.0).unwrap();
        // Envelope kinks for lambda0 = 2, beta = 30.
        let kinks = [
            1.0 / (1.5 * PI),
            60.0 / PI,
            (901.0f64).sqrt() * 2.0 / PI,
        ];
        let mut cuts: Vec<f64> = kinks.iter().flat_map(|&x| [x, -x]).collect();
        cuts.extend([0.0, 20.0]);
        cuts.sort_by(f64::total_cmp);
        for t in [-3.0, -0.2, 0.0, 0.05, 0.5, 3.3, 12.0, 19.9] {
            let mut pts = vec![t];
            pts.extend(cuts.iter().copied().filter(|&c| c > t));
            let oracle: f64 = pts.windows(2).map(|w| integrate(w[0], w[1], 400, |s| k.envelope(s))).sum();
            let d = (k.tail_integral(t) - oracle).abs();
            assert!(d < 1e-11 * oracle + 1e-15, "t={t}: {d}");
        }
        assert_eq!(k.tail_integral(20.0), 0.0);
    }

    #[test]
    fn lowpass_rejects_bad_parameters() {
        assert!(make_lowpass_kernel(1.0, 20.0).is_err());
        assert!(make_lowpass_kernel(0.5, 20.0).is_err());
        assert!(make_lowpass_kernel(2.0, 3.0).is_err());
    }

    #[test]
    fn lowpass_spectrum_is_flat_then_zero() {
        let k = make_lowpass_kernel(2.0, 20.0).unwrap();
        assert!((k.fourier_transform(0.0) - 1.0).abs() < 1e-9);
        for w in [0.1, 0.3, 0.5] {
            assert!((k.fourier_transform(w) - 1.0).abs() < 1e-8, "at {w}");
        }
        for w in [1.0, 1.2, 2.0, 3.5] {
            assert!(k.fourier_transform(w).abs() < 1e-8, "at {w}");
        }
        let mid = k.fourier_transform(0.75);
        assert!(mid > 0.0 && mid < 1.0);
    }

    #[test]
    fn t0_closed_form_for_exponential() {
        let k = Kernel::exponential();
        for (alpha, kb, lambda) in [(0.1, 1, 4.0), (0.5, 2, 16.0), (0.05, 1, 64.0)] {
            let t0 = compute_t0(&k, alpha, kb, lambda).unwrap();
            let exact = alpha * kb as f64 * lambda * std::f64::consts::LN_2 + 1.0 / lambda;
            assert!((t0 - exact).abs() < 1e-6);
        }
        let a = compute_t0(&k, 0.1, 1, 8.0).unwrap();
        let b = compute_t0(&k, 0.1, 1, 16.0).unwrap();
        assert!(b > a);
    }

    #[test]
    fn t0_bounded_by_support_for_compact_kernels() {
        let k = make_bspline_kernel(3, 1.0).unwrap();
        for lambda in [2.0, 8.0, 64.0, 2000.0] {
            let t0 = compute_t0(&k, 0.5, 2, lambda).unwrap();
            assert!(t0 <= 1.5 + 1.0 / lambda + T0_TOLERANCE);
        }
    }

    #[test]
    fn t0_is_minimal() {
        let target = |a: f64, kb: u32, l: f64| (-a * kb as f64 * l).exp2();
        for k in [make_bspline_kernel(3, 1.0).unwrap(), make_lowpass_kernel(2.0, 20.0).unwrap()] {
            for lambda in [4.0, 8.0, 16.0] {
                let t0 = compute_t0(&k, 0.1, 1, lambda).unwrap();
                let shift = 1.0 / lambda;
                assert!(k.tail_integral(t0 - shift) <= target(0.1, 1, lambda));
                assert!(k.tail_integral(t0 - shift - 10.0 * T0_TOLERANCE) > target(0.1, 1, lambda));
            }
        }
    }

    #[test]
    fn t0_domain_errors() {
        let k = Kernel::exponential();
        assert!(compute_t0(&k, 0.0, 1, 4.0).is_err());
        assert!(compute_t0(&k, 0.1, 0, 4.0).is_err());
        assert!(compute_t0(&k, 0.1, 1, 1.0).is_err());
        assert!(matches!(compute_t0(&k, 10.0, 8, 200.0), Err(Error::Unreachable(_))));
    }

    #[test]
    fn triangle_partition_of_unity() {
        let k = Kernel::triangle(1.0).unwrap();
        let r = poisson_row_sum(&k, 1.0, 0, -2, 2).unwrap();
        assert_eq!(r.sum, 1.0);
        assert_eq!(r.deviation, 0.0);
        assert!(!r.window_too_narrow);
    }

    #[test]
    fn narrow_window_is_flagged() {
        let k = make_bspline_kernel(3, 1.0).unwrap();
        let r = poisson_row_sum(&k, 4.0, 0, -2, 2).unwrap();
        assert!(r.window_too_narrow);
        let (lo, hi) = full_row_window(&k, 4.0, 0);
        assert!(!poisson_row_sum(&k, 4.0, 0, lo, hi).unwrap().window_too_narrow);
    }

    #[test]
    fn row_sum_deviation_shrinks_with_rate() {
        let k = make_bspline_kernel(3, 1.0).unwrap();
        for base in [1.3, 2.7, 3.3] {
            let dev = |l: f64| {
                let (lo, hi) = full_row_window(&k, l, 0);
                poisson_row_sum(&k, l, 0, lo, hi).unwrap().deviation
            };
            assert!(dev(2.0 * base) <= dev(base) + 1e-15);
            assert!(dev(64.0 * base) < 1e-4);
        }
    }

    #[test]
    fn descriptor_csv() {
        let k = Kernel::triangle(1.0).unwrap();
        let mut buf = Vec::new();
        k.write_descriptor(&mut buf, -1.0, 1.0, 0.5).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "t,phi(t)\n-1,0\n-0.5,0.5\n0,1\n0.5,0.5\n1,0\n");
    }
}
