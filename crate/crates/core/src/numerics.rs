//! Small numerical helpers shared by the modules: composite quadrature,
//! grid suprema with local refinement, and number formatting for CSV output.

use std::fs;
use std::io::Write;
use std::num::NonZeroUsize;
use std::path::Path;
use std::sync::OnceLock;

use gauss_quad::legendre::GaussLegendre;

const PANEL_DEGREE: usize = 16;

fn panel_rule() -> &'static GaussLegendre {
    static RULE: OnceLock<GaussLegendre> = OnceLock::new();
    RULE.get_or_init(|| GaussLegendre::new(NonZeroUsize::new(PANEL_DEGREE).unwrap()))
}

/// Composite Gauss-Legendre quadrature of `f` over `[a, b]` with `panels`
/// equal panels of a 16-point rule.
pub fn integrate<F: FnMut(f64) -> f64>(a: f64, b: f64, panels: usize, mut f: F) -> f64 {
    let panels = panels.max(1);
    let width = (b - a) / panels as f64;
    let rule = panel_rule();
    (0..panels)
        .map(|i| {
            let lo = a + i as f64 * width;
            let hi = if i + 1 == panels { b } else { lo + width };
            rule.integrate(lo, hi, &mut f)
        })
        .sum()
}

/// Evenly spaced grid `t0, t0 + step, ...` up to and including `t1`.
///
/// `t1` is appended when it does not fall on the grid, so both endpoints are
/// always sampled.
pub fn grid(t0: f64, t1: f64, step: f64) -> Vec<f64> {
    let count = ((t1 - t0) / step + 1e-9).floor() as usize;
    let mut pts: Vec<f64> = (0..=count).map(|i| t0 + i as f64 * step).collect();
    if let Some(&last) = pts.last() {
        if t1 - last > 1e-12 * step.max(1.0) {
            pts.push(t1);
        }
    }
    pts
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridMax {
    pub value: f64,
    pub at: f64,
}

/// Maximum of `values` over the grid `pts`, where every interior local
/// maximum is refined by the vertex of the parabola through it and its two
/// neighbours. Points earlier than `floor` are ignored.
///
/// Refinement uses only sampled values, so restricting the grid to a later
/// floor can never raise the result.
pub fn refined_grid_max(pts: &[f64], values: &[f64], floor: Option<f64>) -> Option<GridMax> {
    debug_assert_eq!(pts.len(), values.len());
    let first = match floor {
        Some(f) => pts.iter().position(|&t| t >= f)?,
        None => 0,
    };
    if first >= pts.len() {
        return None;
    }
    let mut best = GridMax {
        value: values[first],
        at: pts[first],
    };
    for i in first..pts.len() {
        let y1 = values[i];
        if y1 > best.value {
            best = GridMax {
                value: y1,
                at: pts[i],
            };
        }
        if i == first || i + 1 == pts.len() {
            continue;
        }
        let (y0, y2) = (values[i - 1], values[i + 1]);
        if y1 < y0 || y1 < y2 {
            continue;
        }
        let h_left = pts[i] - pts[i - 1];
        let h_right = pts[i + 1] - pts[i];
        if (h_left - h_right).abs() > 1e-9 * h_left {
            continue;
        }
        let curvature = y0 - 2.0 * y1 + y2;
        if curvature >= 0.0 {
            continue;
        }
        let vertex = y1 - (y0 - y2) * (y0 - y2) / (8.0 * curvature);
        if vertex > best.value {
            let offset = h_left * (y0 - y2) / (2.0 * curvature);
            best = GridMax {
                value: vertex,
                at: pts[i] + offset,
            };
        }
    }
    Some(best)
}

/// Golden-section maximization of a unimodal `f` on `[a, b]`.
pub fn golden_max<F: FnMut(f64) -> f64>(mut f: F, mut a: f64, mut b: f64, tol: f64) -> GridMax {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while (b - a).abs() > tol {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    let at = 0.5 * (a + b);
    GridMax { value: f(at), at }
}

/// Formats `x` with `digits` significant digits in plain decimal notation.
pub fn fmt_sig(x: f64, digits: usize) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let magnitude = x.abs().log10().floor() as i64;
    let decimals = (digits as i64 - 1 - magnitude).max(0) as usize;
    let s = format!("{x:.decimals$}");
    // rounding may carry into a new leading digit (9.99.. -> 10.0..)
    if s.trim_start_matches('-').replace('.', "").trim_start_matches('0').len() > digits
        && decimals > 0
    {
        let decimals = decimals - 1;
        return format!("{x:.decimals$}");
    }
    s
}

/// Shortest representation that parses back to the same `f64`.
pub fn fmt_f64(x: f64) -> String {
    format!("{x}")
}

/// Writes `bytes` to `path` through a temporary sibling file and a rename, so
/// readers never observe a partially written artifact.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = std::path::PathBuf::from(tmp);
    {
        let mut file = fs::File::create(&tmp)?;
        file.write_all(bytes)?;
        file.sync_all()?;
    }
    fs::rename(&tmp, path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadrature_is_exact_for_polynomials() {
        let v = integrate(-1.0, 2.0, 3, |x| x.powi(7) - 3.0 * x * x);
        let exact = (2f64.powi(8) - 1.0) / 8.0 - (8.0 + 1.0);
        assert!((v - exact).abs() < 1e-12);
    }

    #[test]
    fn grid_includes_both_endpoints() {
        let g = grid(0.0, 1.0, 0.3);
        assert_eq!(g.len(), 5);
        assert_eq!(*g.last().unwrap(), 1.0);
        let g = grid(0.0, 1.0, 0.25);
        assert_eq!(g.len(), 5);
    }

    #[test]
    fn parabolic_refinement_recovers_peak() {
        let pts = grid(0.0, 1.0, 0.1);
        let vals: Vec<f64> = pts.iter().map(|t| 1.0 - (t - 0.43) * (t - 0.43)).collect();
        let m = refined_grid_max(&pts, &vals, None).unwrap();
        assert!((m.value - 1.0).abs() < 1e-12);
        assert!((m.at - 0.43).abs() < 1e-9);
    }

    #[test]
    fn floor_restricts_candidates() {
        let pts = grid(0.0, 1.0, 0.1);
        let vals: Vec<f64> = pts.iter().map(|t| (1.0 - t).abs()).collect();
        let m = refined_grid_max(&pts, &vals, Some(0.5)).unwrap();
        assert!((m.value - 0.5).abs() < 1e-12);
        assert!(refined_grid_max(&pts, &vals, Some(1.5)).is_none());
    }

    #[test]
    fn golden_section_finds_max() {
        let m = golden_max(|t| (t * 3.0).cos(), -0.5, 0.4, 1e-10);
        assert!(m.at.abs() < 1e-8);
    }

    #[test]
    fn significant_digit_formatting() {
        assert_eq!(fmt_sig(0.811278124459, 12), "0.811278124459");
        assert_eq!(fmt_sig(1.0, 12), "1.00000000000");
        assert_eq!(fmt_sig(0.0, 12), "0");
        assert_eq!(fmt_sig(123.456, 4), "123.5");
        assert_eq!(fmt_sig(9.9999, 3), "10.0");
    }
}
