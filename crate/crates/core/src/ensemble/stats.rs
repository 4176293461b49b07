use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::theory::power_law_fit;

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
struct Compensated {
    sum: f64,
    c: f64,
}

impl Compensated {
    fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.c += (self.sum - t) + v;
        } else {
            self.c += (v - t) + self.sum;
        }
        self.sum = t;
    }

    fn value(&self) -> f64 {
        self.sum + self.c
    }
}

/// Pointwise ensemble mean and standard error of the mean.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleResult {
    pub x: Vec<f64>,
    pub mean: Vec<f64>,
    /// sample std/√M; zero for a single member.
    pub standard_error: Vec<f64>,
    pub members: usize,
}

/// Averages equally sampled arrays on the grid `x`. Sums are compensated so
/// the result does not depend on the order of `per_realization`.
pub fn average_densities(x: &[f64], per_realization: &[Vec<f64>]) -> Result<EnsembleResult> {
    let m = per_realization.len();
    if m == 0 {
        return Err(invalid("nothing to average"));
    }
    if let Some(bad) = per_realization.iter().position(|d| d.len() != x.len()) {
        return Err(invalid(format!(
            "realization {bad} has {} samples but the grid has {}",
            per_realization[bad].len(),
            x.len()
        )));
    }
    let mf = m as f64;
    let mut mean = Vec::with_capacity(x.len());
    let mut se = Vec::with_capacity(x.len());
    for j in 0..x.len() {
        let mut s = Compensated::default();
        per_realization.iter().for_each(|d| s.add(d[j]));
        let mu = s.value() / mf;
        let mut v = Compensated::default();
        per_realization
            .iter()
            .for_each(|d| v.add((d[j] - mu) * (d[j] - mu)));
        mean.push(mu);
        se.push(if m > 1 {
            (v.value() / (mf - 1.0) / mf).sqrt()
        } else {
            0.0
        });
    }
    Ok(EnsembleResult {
        x: x.to_vec(),
        mean,
        standard_error: se,
        members: m,
    })
}

/// Mirror-averages a profile sampled on a grid symmetric about 0 (node i
/// pairs with node n − i); returns (x ≥ 0, (n(x) + n(−x))/2).
pub fn fold(x: &[f64], n: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let len = x.len();
    let mut xs = Vec::new();
    let mut ns = Vec::new();
    for i in 0..len {
        if x[i] < 0.0 {
            continue;
        }
        let mirror = len - i;
        let partner = if x[i] == 0.0 || mirror >= len {
            n[i]
        } else {
            n[mirror]
        };
        xs.push(x[i]);
        ns.push(0.5 * (n[i] + partner));
    }
    (xs, ns)
}

/// Means of `n` over `bins` logarithmic bins of (lo, hi); empty bins are
/// dropped. Bin positions are geometric bin centres.
pub fn log_bin(x: &[f64], n: &[f64], lo: f64, hi: f64, bins: usize) -> (Vec<f64>, Vec<f64>) {
    let r = (hi / lo).ln() / bins as f64;
    let mut sum = vec![0.0; bins];
    let mut count = vec![0usize; bins];
    for (xi, ni) in x.iter().zip(n) {
        if *xi > lo && *xi < hi {
            let b = (((xi / lo).ln() / r) as usize).min(bins - 1);
            sum[b] += ni;
            count[b] += 1;
        }
    }
    let mut xs = Vec::new();
    let mut ns = Vec::new();
    for b in 0..bins {
        if count[b] > 0 {
            xs.push(lo * (r * (b as f64 + 0.5)).exp());
            ns.push(sum[b] / count[b] as f64);
        }
    }
    (xs, ns)
}

/// Per-bin mean and standard error of log-binned, folded member profiles.
pub fn binned_ensemble(
    x: &[f64],
    members: &[Vec<f64>],
    lo: f64,
    hi: f64,
    bins: usize,
) -> Result<EnsembleResult> {
    let mut centres = Vec::new();
    let binned: Vec<Vec<f64>> = members
        .iter()
        .map(|d| {
            let (xf, nf) = fold(x, d);
            let (c, b) = log_bin(&xf, &nf, lo, hi, bins);
            centres = c;
            b
        })
        .collect();
    average_densities(&centres, &binned)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub n_points: usize,
    /// Statistics of ln(n_sim/n_theory) over the window.
    pub mean_log_deviation: f64,
    pub rms_log_deviation: f64,
    pub max_abs_log_deviation: f64,
    /// Power-law exponents ν (n ∝ x^−ν) fitted to each profile.
    pub simulation_nu: f64,
    pub theory_nu: f64,
    pub nu_difference: f64,
    pub relative_nu_difference: f64,
}

/// Log-log interpolation of a positive profile; None outside its range or
/// where it vanishes.
fn interp_loglog(x: &[f64], n: &[f64], at: f64) -> Option<f64> {
    let i = x.partition_point(|&v| v <= at);
    if i == 0 || i > x.len() {
        return None;
    }
    if i == x.len() {
        return (x[i - 1] == at && n[i - 1] > 0.0).then(|| n[i - 1]);
    }
    let (x0, x1, n0, n1) = (x[i - 1], x[i], n[i - 1], n[i]);
    if !(n0 > 0.0 && n1 > 0.0 && x0 > 0.0) {
        return None;
    }
    let t = (at / x0).ln() / (x1 / x0).ln();
    Some((n0.ln() * (1.0 - t) + n1.ln() * t).exp())
}

/// Compares a simulated profile (x ascending, positive side) with a theory
/// profile over (x_lo, x_hi): log deviations at the simulation samples and
/// the difference of the fitted log-log slopes.
pub fn compare_with_theory(
    sim_x: &[f64],
    sim_n: &[f64],
    theory_x: &[f64],
    theory_n: &[f64],
    x_lo: f64,
    x_hi: f64,
) -> Result<ComparisonReport> {
    let mut xs = Vec::new();
    let mut ss = Vec::new();
    let mut ts = Vec::new();
    let mut dev = Vec::new();
    for (x, s) in sim_x.iter().zip(sim_n) {
        if *x > x_lo && *x < x_hi && *s > 0.0 {
            if let Some(t) = interp_loglog(theory_x, theory_n, *x) {
                xs.push(*x);
                ss.push(*s);
                ts.push(t);
                dev.push((s / t).ln());
            }
        }
    }
    if dev.len() < 10 {
        return Err(Error::InsufficientData(format!(
            "only {} overlapping positive samples in ({x_lo:e}, {x_hi:e})",
            dev.len()
        )));
    }
    let n = dev.len() as f64;
    let lo = xs[0] * 0.999_999;
    let hi = xs[xs.len() - 1] * 1.000_001;
    let sim_fit = power_law_fit(&xs, &ss, lo, hi)?;
    let th_fit = power_law_fit(&xs, &ts, lo, hi)?;
    Ok(ComparisonReport {
        n_points: dev.len(),
        mean_log_deviation: dev.iter().sum::<f64>() / n,
        rms_log_deviation: (dev.iter().map(|d| d * d).sum::<f64>() / n).sqrt(),
        max_abs_log_deviation: dev.iter().map(|d| d.abs()).fold(0.0, f64::max),
        simulation_nu: sim_fit.nu,
        theory_nu: th_fit.nu,
        nu_difference: sim_fit.nu - th_fit.nu,
        relative_nu_difference: (sim_fit.nu - th_fit.nu) / th_fit.nu,
    })
}
