//! Acceptance run: one PASS/FAIL line per criterion, nonzero exit on failure.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use coarse_quant::deviations::{binomial_tail, chernoff_bound, mc_tail, verify_prop1, UnitLaw};
use coarse_quant::entropy::{bound_curve, reference_upper_rate, theorem_alpha};
use coarse_quant::epsnet::{enumerate_survivors, CountingInstance, ENUMERATION_BUDGET};
use coarse_quant::kernels::{
    compute_t0, full_row_window, make_bspline_kernel, make_lowpass_kernel, poisson_row_sum, Kernel,
};
use coarse_quant::quantizers::{make_alphabet, sigma_delta_encode, Encoder};
use coarse_quant::reconstruction::{
    decay_experiment, fit_rate, reconstruct_at, sup_error, truncated_deviation, DecayConfig, FitModel,
};
use coarse_quant::signals::{random_bandlimited, sample_signal};

type Check = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn h(p: f64) -> f64 {
    let term = |x: f64| if x == 0.0 { 0.0 } else { -x * x.log2() };
    term(p) + term(1.0 - p)
}

fn theorem_curve() -> Check {
    let grid: Vec<f64> = (0..=100).map(|i| i as f64 / 100.0).collect();
    let curve = bound_curve(1, &grid).map_err(|e| e.to_string())?;
    let mut csv = Vec::new();
    curve.write_csv(&mut csv).map_err(|e| e.to_string())?;
    let text = String::from_utf8(csv).map_err(|e| e.to_string())?;
    let rows: Vec<(f64, f64)> = text
        .lines()
        .skip(1)
        .map(|l| {
            let (m, a) = l.split_once(',').expect("two columns");
            (m.parse().unwrap(), a.parse().unwrap())
        })
        .collect();
    ensure(rows.len() == 101, || format!("{} rows", rows.len()))?;
    let worst = rows.iter().map(|(m, a)| (a - h((1.0 + m) / 2.0)).abs()).fold(0.0, f64::max);
    ensure(worst <= 1e-9, || format!("max deviation {worst:e}"))?;
    ensure((rows[0].1 - 1.0).abs() <= 1e-12 && rows[100].1.abs() <= 1e-12, || {
        format!("endpoints {} {}", rows[0].1, rows[100].1)
    })?;
    ensure(rows.windows(2).all(|w| w[1].1 <= w[0].1), || "curve increases".into())?;
    Ok(format!("max |alpha - h| = {worst:.1e}"))
}

fn reference_overlay() -> Check {
    let r = reference_upper_rate();
    ensure(r.rate == 0.102 && r.amplitude_ceiling == 0.05, || format!("{r:?}"))?;
    let a = theorem_alpha(0.05, 1).map_err(|e| e.to_string())?;
    ensure((a - 0.998_195).abs() <= 1e-6, || format!("alpha(0.05) = {a}"))?;
    Ok(format!("alpha(0.05, 1) = {a:.9} vs reference 0.102"))
}

fn prop1_exhaustive() -> Check {
    let p_grid: Vec<f64> = (1..=9).map(|i| i as f64 / 10.0).collect();
    let a_grid: Vec<f64> = (1..=20).map(|i| i as f64 / 20.0).collect();
    let recs = verify_prop1(30, &p_grid, &a_grid).map_err(|e| e.to_string())?;
    let bad = recs.iter().filter(|r| !r.satisfied).count();
    ensure(bad == 0, || format!("{bad} violations"))?;
    let endpoint = recs
        .iter()
        .filter(|r| r.a == 1.0)
        .map(|r| (r.exact_tail - r.chernoff).abs())
        .fold(0.0, f64::max);
    ensure(endpoint <= 1e-15, || format!("endpoint gap {endpoint:e}"))?;
    let spot = binomial_tail(10, 8, 0.5).map_err(|e| e.to_string())?;
    ensure(spot == 0.0546875, || format!("P(S10 >= 8) = {spot}"))?;
    let bound = chernoff_bound(10, 0.8, 0.5).map_err(|e| e.to_string())?;
    ensure((bound - 0.14552).abs() < 1e-5, || format!("bound {bound}"))?;
    Ok(format!("{} records, 0 violations, endpoint gap {endpoint:.1e}", recs.len()))
}

fn prop2_statistical() -> Check {
    let e = mc_tail(&UnitLaw::Uniform, 10, 0.8, 1_000_000, 20_240_917).map_err(|e| e.to_string())?;
    let limit = 0.0546875 + 3.0 * e.std_error;
    ensure(e.estimate <= limit, || format!("estimate {} > {limit}", e.estimate))?;
    Ok(format!("estimate {:.6} (SE {:.1e}) <= {limit:.6}", e.estimate, e.std_error))
}

fn counting_argument() -> Check {
    let toy = enumerate_survivors(&CountingInstance::averaging(4, 1, 0.5).map_err(|e| e.to_string())?)
        .map_err(|e| e.to_string())?;
    ensure(toy.survivor_count == 5 && (toy.bound_n - 9.48).abs() < 0.005 && toy.satisfied, || {
        format!("toy {toy:?}")
    })?;

    let mut sweep = 0;
    for m in 4..=20usize {
        for i in 1..=9 {
            let a = i as f64 / 10.0;
            let r = enumerate_survivors(&CountingInstance::averaging(m, 1, a).map_err(|e| e.to_string())?)
                .map_err(|e| e.to_string())?;
            let k = ((m as f64) * (1.0 + a) / 2.0 - 1e-9).ceil() as i64;
            let exact = binomial_tail(m as u64, k, 0.5).map_err(|e| e.to_string())? * r.total as f64;
            ensure(r.survivor_count as f64 == exact, || {
                format!("M={m} a={a}: {} survivors vs {exact}", r.survivor_count)
            })?;
            ensure(r.satisfied && (r.survivor_count as f64) <= r.bound_n, || {
                format!("M={m} a={a}: bound violated {r:?}")
            })?;
            sweep += 1;
        }
    }

    let kernels = [
        make_bspline_kernel(3, 1.0).map_err(|e| e.to_string())?,
        Kernel::triangle(1.0).map_err(|e| e.to_string())?,
        Kernel::exponential(),
    ];
    let mut weighted = 0;
    for kernel in &kernels {
        for (k, lambda, half, mu, delta) in [
            (1u32, 2.0, 3.0, 0.5, 0.05),
            (1, 2.0, 3.5, 0.3, 0.02),
            (1, 3.0, 2.0, 0.6, 0.1),
            (2, 1.5, 2.5, 0.5, 0.05),
        ] {
            let margin = compute_t0(kernel, 0.5, k, lambda).map_err(|e| e.to_string())?.max(0.0);
            let inst = CountingInstance::kernel_weighted(kernel, k, lambda, half, margin, mu, delta)
                .map_err(|e| e.to_string())?;
            if k as usize * inst.symbol_count() > ENUMERATION_BUDGET as usize {
                continue;
            }
            let r = enumerate_survivors(&inst).map_err(|e| e.to_string())?;
            ensure(r.satisfied && r.survivor_count as f64 <= r.bound_measured, || {
                format!("{kernel} K={k} lambda={lambda}: {r:?}")
            })?;
            weighted += 1;
        }
    }
    ensure(weighted >= 6, || format!("only {weighted} kernel-weighted instances fit the budget"))?;
    Ok(format!("toy 5 <= {:.4}; sweep {sweep} instances; {weighted} kernel-weighted", toy.bound_n))
}

fn t0_closed_form() -> Check {
    let k = Kernel::exponential();
    let mut worst: f64 = 0.0;
    for alpha in [0.05, 0.1, 0.5] {
        for bits in [1u32, 2] {
            for lambda in 4..=64 {
                let l = lambda as f64;
                let t0 = compute_t0(&k, alpha, bits, l).map_err(|e| e.to_string())?;
                let want = alpha * bits as f64 * l * std::f64::consts::LN_2 + 1.0 / l;
                worst = worst.max((t0 - want).abs());
            }
        }
    }
    ensure(worst <= 1e-6, || format!("max error {worst:e}"))?;
    Ok(format!("max |T0 - closed form| = {worst:.1e}"))
}

fn truncation_bound() -> Check {
    let x = random_bandlimited(7, 2, 0.5, 0.1).map_err(|e| e.to_string())?;
    let kernels = [
        make_bspline_kernel(3, 1.0).map_err(|e| e.to_string())?,
        make_lowpass_kernel(2.0, 20.0).map_err(|e| e.to_string())?,
        Kernel::exponential(),
    ];
    let alphabet = make_alphabet(1).map_err(|e| e.to_string())?;
    let mut configs = 0;
    let mut tightest: f64 = 0.0;
    for kernel in &kernels {
        for alpha in [0.1, 0.5] {
            for lambda in [4.0, 8.0, 16.0, 32.0] {
                let margin = compute_t0(kernel, alpha, 1, lambda).map_err(|e| e.to_string())?.max(0.0);
                // Window reaches 40 beyond the padded interval.
                let reach = 1.0 + margin + 40.0;
                let lo = (-reach * lambda).floor() as i64;
                let s = sample_signal(&x, lambda, lo, -lo).map_err(|e| e.to_string())?;
                let q = sigma_delta_encode(&s, &alphabet, 1, &[]).map_err(|e| e.to_string())?;
                let c = truncated_deviation(&q, kernel, alpha, 1, -1.0, 1.0).map_err(|e| e.to_string())?;
                ensure(c.deviation <= c.bound, || {
                    format!("{kernel} alpha={alpha} lambda={lambda}: {} > {}", c.deviation, c.bound)
                })?;
                tightest = tightest.max(c.deviation / c.bound);
                configs += 1;
            }
        }
    }
    Ok(format!("{configs} configurations, max deviation/bound = {tightest:.3}"))
}

fn poisson_row_sums() -> Check {
    let kernels = [
        make_bspline_kernel(3, 1.0).map_err(|e| e.to_string())?,
        make_lowpass_kernel(2.0, 20.0).map_err(|e| e.to_string())?,
    ];
    let mut summary = Vec::new();
    for kernel in &kernels {
        // c is measured at the base rate; each doubling must stay within c / lambda.
        // Rounding noise of the row sum is allowed at 1e-14 per unit of lambda.
        let lambdas = [4.3, 8.6, 17.2, 34.4, 68.8];
        let mut devs = Vec::new();
        for &lambda in &lambdas {
            let (lo, hi) = full_row_window(kernel, lambda, 0);
            let r = poisson_row_sum(kernel, lambda, 0, lo, hi).map_err(|e| e.to_string())?;
            ensure(!r.window_too_narrow, || format!("{kernel}: window too narrow"))?;
            devs.push(r.deviation);
        }
        let c = lambdas[0] * devs[0];
        for (&lambda, &d) in lambdas.iter().zip(&devs) {
            ensure(d <= c / lambda + 1e-14, || format!("{kernel}: deviation {d:e} > {c:e} / {lambda}"))?;
        }
        summary.push(format!("{kernel} c = {c:.2e}"));
    }
    let tri = Kernel::triangle(1.0).map_err(|e| e.to_string())?;
    for lambda in [2.0, 4.0, 8.0, 16.0, 32.0] {
        let (lo, hi) = full_row_window(&tri, lambda, 3);
        let r = poisson_row_sum(&tri, lambda, 3, lo, hi).map_err(|e| e.to_string())?;
        ensure(r.deviation == 0.0, || format!("triangle lambda={lambda}: {}", r.deviation))?;
    }
    Ok(format!("{}; triangle exact", summary.join("; ")))
}

fn sampling_sanity() -> Check {
    let x = random_bandlimited(20_240_917, 2, 0.5, 0.1).map_err(|e| e.to_string())?;
    let k = make_lowpass_kernel(2.0, 20.0).map_err(|e| e.to_string())?;
    let lambda = 8.0;
    let s = sample_signal(&x, lambda, -320, 320).map_err(|e| e.to_string())?;
    let e = sup_error(&x, &s, &k, -5.0, 5.0, 1.0 / 64.0, None).map_err(|e| e.to_string())?;
    ensure(e <= 1e-3, || format!("sup error {e:e}"))?;
    let mid = (x.eval(0.3) - reconstruct_at(&s, &k, 0.3)).abs();
    Ok(format!("sup error {e:.2e} on [-5, 5] (|x - x~|(0.3) = {mid:.1e})"))
}

fn first_order_decay() -> Check {
    let ensemble = (0..8u64)
        .map(|i| random_bandlimited(1 + i, 2, 0.5, 0.1))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| e.to_string())?;
    let k = make_lowpass_kernel(2.0, 20.0).map_err(|e| e.to_string())?;
    let config = DecayConfig { bit_depth: 1, t0: -2.0, t1: 2.0, grid_step: None, padding_alpha: None };
    let curve = decay_experiment(
        &ensemble,
        Encoder::SigmaDelta { order: 1 },
        &k,
        &[8.0, 16.0, 32.0, 64.0, 128.0],
        &config,
    )
    .map_err(|e| e.to_string())?;
    let poly = fit_rate(&curve, FitModel::Polynomial).map_err(|e| e.to_string())?;
    let expo = fit_rate(&curve, FitModel::Exponential).map_err(|e| e.to_string())?;
    let bound = theorem_alpha(0.5, 1).map_err(|e| e.to_string())?;
    ensure((0.7..=1.3).contains(&poly.rate), || format!("degree {}", poly.rate))?;
    ensure(expo.rate <= bound, || format!("exponential rate {} > {bound}", expo.rate))?;
    Ok(format!("degree {:.3}, exponential rate {:.4} <= {bound:.6}", poly.rate, expo.rate))
}

fn main() -> ExitCode {
    let criteria: [(&str, Duration, fn() -> Check); 10] = [
        ("rate bound curve, K = 1", Duration::from_secs(1), theorem_curve),
        ("reference rate overlay", Duration::from_secs(1), reference_overlay),
        ("exact tails under Chernoff", Duration::from_secs(5), prop1_exhaustive),
        ("Monte-Carlo tail ordering", Duration::from_secs(30), prop2_statistical),
        ("counting argument", Duration::from_secs(120), counting_argument),
        ("T0 closed form", Duration::from_secs(1), t0_closed_form),
        ("truncation bound", Duration::from_secs(60), truncation_bound),
        ("Poisson row sums", Duration::from_secs(10), poisson_row_sums),
        ("sampling-theorem sanity", Duration::from_secs(10), sampling_sanity),
        ("first-order Sigma-Delta decay", Duration::from_secs(120), first_order_decay),
    ];
    let mut failed = 0;
    for (i, (name, budget, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = check();
        let took = start.elapsed();
        let within = took <= *budget;
        let (tag, detail) = match (&outcome, within) {
            (Ok(d), true) => ("PASS", d.clone()),
            (Ok(d), false) => ("FAIL", format!("{d}; over time budget")),
            (Err(e), _) => ("FAIL", e.clone()),
        };
        if tag == "FAIL" {
            failed += 1;
        }
        println!(
            "{tag} criterion {:>2}: {name}: {detail} [{:.2}s / {}s]",
            i + 1,
            took.as_secs_f64(),
            budget.as_secs()
        );
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
