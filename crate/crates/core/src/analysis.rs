//! Power-law fits of `Q(τ)`, decade-wise regime labels and an oscillation
//! measure for Stückelberg interference.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PowerLawFit {
    /// `Q ≈ a / τ^b`.
    pub a: f64,
    pub b: f64,
    pub window: (f64, f64),
    pub r2: f64,
    pub n_points: usize,
}

fn in_window(t: f64, window: (f64, f64)) -> bool {
    let slack = 1e-9;
    t >= window.0 * (1.0 - slack) && t <= window.1 * (1.0 + slack)
}

/// Ordinary least squares `y = c0 + c1 x`; returns `(c0, c1, r2)`.
fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(u, v)| (u - mx) * (v - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_tot: f64 = y.iter().map(|v| (v - my).powi(2)).sum();
    let ss_res: f64 = x.iter().zip(y).map(|(u, v)| (v - intercept - slope * u).powi(2)).sum();
    let r2 = if ss_tot > 0.0 {
        (1.0 - ss_res / ss_tot).clamp(0.0, 1.0)
    } else {
        1.0
    };
    (intercept, slope, r2)
}

/// Least squares on `(ln τ, ln Q)` over the points inside `window`.
pub fn fit_powerlaw(points: &[(f64, f64)], window: (f64, f64)) -> Result<PowerLawFit> {
    if !(window.0 > 0.0 && window.1 > window.0) {
        return Err(Error::Fit(format!("bad window [{}, {}]", window.0, window.1)));
    }
    let inside: Vec<(f64, f64)> = points.iter().copied().filter(|p| in_window(p.0, window)).collect();
    if inside.len() < 4 {
        return Err(Error::Fit(format!(
            "window [{}, {}] holds {} points, need at least 4",
            window.0,
            window.1,
            inside.len()
        )));
    }
    if let Some(p) = inside.iter().find(|p| !(p.1 > 0.0)) {
        return Err(Error::Fit(format!("nonpositive Q = {} at τ = {}", p.1, p.0)));
    }
    let x: Vec<f64> = inside.iter().map(|p| p.0.ln()).collect();
    let y: Vec<f64> = inside.iter().map(|p| p.1.ln()).collect();
    let (c0, c1, r2) = linear_fit(&x, &y);
    Ok(PowerLawFit {
        a: c0.exp(),
        b: -c1,
        window,
        r2,
        n_points: inside.len(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OscillationMetric {
    /// Strict interior extrema after 3-point median smoothing.
    pub n_extrema: usize,
    pub n_extrema_raw: usize,
    /// Peak-to-trough of the detrended series over the mean of `Q`.
    pub relative_amplitude: f64,
}

/// Sign changes of the nonzero first differences; a flat top counts once.
fn count_extrema(y: &[f64]) -> usize {
    let signs: Vec<bool> = y
        .windows(2)
        .map(|w| w[1] - w[0])
        .filter(|d| *d != 0.0)
        .map(|d| d > 0.0)
        .collect();
    signs.windows(2).filter(|w| w[0] != w[1]).count()
}

fn median3(y: &[f64]) -> Vec<f64> {
    let mut out = y.to_vec();
    for i in 1..y.len().saturating_sub(1) {
        let mut w = [y[i - 1], y[i], y[i + 1]];
        w.sort_by(f64::total_cmp);
        out[i] = w[1];
    }
    out
}

/// Least-squares polynomial of degree 2 evaluated at the sample points.
fn quadratic_trend(x: &[f64], y: &[f64]) -> Vec<f64> {
    use nalgebra::{DMatrix, DVector};
    let a = DMatrix::from_fn(x.len(), 3, |r, c| x[r].powi(c as i32));
    let b = DVector::from_column_slice(y);
    let coef = a
        .clone()
        .svd(true, true)
        .solve(&b, 1e-14)
        .expect("SVD least squares with both factors");
    (a * coef).iter().copied().collect()
}

/// Extrema count and relative amplitude of `Q(τ)` around a smooth trend
/// (quadratic in `ln τ`).
pub fn oscillation_metric(points: &[(f64, f64)]) -> Result<OscillationMetric> {
    if points.len() < 8 {
        return Err(Error::Fit(format!("need at least 8 points, got {}", points.len())));
    }
    if points.windows(2).any(|w| !(w[1].0 > w[0].0)) || !(points[0].0 > 0.0) {
        return Err(Error::Fit("τ must be positive and strictly ascending".into()));
    }
    let y: Vec<f64> = points.iter().map(|p| p.1).collect();
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    if !(mean > 0.0) {
        return Err(Error::Fit("mean Q must be positive".into()));
    }
    let x: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let trend = quadratic_trend(&x, &y);
    let resid: Vec<f64> = y.iter().zip(&trend).map(|(a, b)| a - b).collect();
    let hi = resid.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lo = resid.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(OscillationMetric {
        n_extrema: count_extrema(&median3(&y)),
        n_extrema_raw: count_extrema(&y),
        relative_amplitude: (hi - lo) / mean,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecadeFit {
    pub lo: f64,
    pub hi: f64,
    pub b: f64,
    pub r2: f64,
    /// Nearest candidate exponent.
    pub label: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Regime {
    pub lo: f64,
    pub hi: f64,
    pub label: f64,
    /// Exponent refitted over the merged window.
    pub b: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Segmentation {
    pub decades: Vec<DecadeFit>,
    pub regimes: Vec<Regime>,
    /// `τ` where the label changes.
    pub boundaries: Vec<f64>,
}

impl Segmentation {
    /// Columns `lo,hi,b,r2,label`, one row per decade.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "lo,hi,b,r2,label")?;
        for d in &self.decades {
            writeln!(w, "{},{},{},{},{}", d.lo, d.hi, d.b, d.r2, d.label)?;
        }
        Ok(())
    }

    pub fn labels(&self) -> Vec<f64> {
        self.decades.iter().map(|d| d.label).collect()
    }
}

fn nearest(b: f64, candidates: &[f64]) -> f64 {
    candidates
        .iter()
        .copied()
        .min_by(|x, y| (x - b).abs().total_cmp(&(y - b).abs()))
        .expect("candidates are nonempty")
}

/// Fits every full decade `[anchor·10^k, anchor·10^(k+1)]` inside the sweep
/// and labels it with the nearest candidate exponent; equal neighbouring
/// labels merge into one regime.
pub fn detect_crossover(points: &[(f64, f64)], candidates: &[f64], anchor: f64) -> Result<Segmentation> {
    if candidates.is_empty() {
        return Err(Error::Fit("no candidate exponents".into()));
    }
    if !(anchor > 0.0) {
        return Err(Error::Fit(format!("decade anchor must be positive, got {anchor}")));
    }
    let (tmin, tmax) = points.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| {
        (lo.min(p.0), hi.max(p.0))
    });
    if !(tmin > 0.0) || !(tmax / tmin >= 1000.0 * (1.0 - 1e-9)) {
        return Err(Error::Fit(format!("sweep spans less than 3 decades ([{tmin}, {tmax}])")));
    }
    let k0 = ((tmin / anchor).log10() - 1e-9).ceil() as i32;
    let k1 = ((tmax / anchor).log10() + 1e-9).floor() as i32;
    let mut decades = Vec::new();
    for k in k0..k1 {
        let lo = anchor * 10f64.powi(k);
        let hi = anchor * 10f64.powi(k + 1);
        let fit = fit_powerlaw(points, (lo, hi))?;
        decades.push(DecadeFit {
            lo,
            hi,
            b: fit.b,
            r2: fit.r2,
            label: nearest(fit.b, candidates),
        });
    }
    let mut regimes: Vec<Regime> = Vec::new();
    let mut boundaries = Vec::new();
    for d in &decades {
        match regimes.last_mut() {
            Some(r) if r.label == d.label => r.hi = d.hi,
            last => {
                if last.is_some() {
                    boundaries.push(d.lo);
                }
                regimes.push(Regime {
                    lo: d.lo,
                    hi: d.hi,
                    label: d.label,
                    b: d.b,
                });
            }
        }
    }
    for r in &mut regimes {
        r.b = fit_powerlaw(points, (r.lo, r.hi))?.b;
    }
    Ok(Segmentation {
        decades,
        regimes,
        boundaries,
    })
}

/// Log-log slopes `-d ln Q / d ln τ` between neighbouring points, at the
/// geometric midpoints.
pub fn local_exponents(points: &[(f64, f64)]) -> Vec<(f64, f64)> {
    points
        .windows(2)
        .map(|w| {
            let t = (w[0].0 * w[1].0).sqrt();
            let b = -(w[1].1.ln() - w[0].1.ln()) / (w[1].0.ln() - w[0].0.ln());
            (t, b)
        })
        .collect()
}

/// Longest stretch, in decades of `τ`, over which every local exponent lies
/// within `tol` of `target`.
pub fn longest_run(points: &[(f64, f64)], target: f64, tol: f64) -> f64 {
    let mut best: f64 = 0.0;
    let mut start: Option<f64> = None;
    for w in points.windows(2) {
        let b = -(w[1].1.ln() - w[0].1.ln()) / (w[1].0.ln() - w[0].0.ln());
        if (b - target).abs() <= tol {
            let s = *start.get_or_insert(w[0].0);
            best = best.max((w[1].0 / s).log10());
        } else {
            start = None;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ramp::log_grid;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    fn series(f: impl Fn(f64) -> f64, lo: f64, hi: f64, n: usize) -> Vec<(f64, f64)> {
        log_grid(lo, hi, n).into_iter().map(|t| (t, f(t))).collect()
    }

    #[test]
    fn exact_power_laws() {
        let p = series(|t| 5.0 / (t * t), 1.0, 100.0, 20);
        let fit = fit_powerlaw(&p, (1.0, 100.0)).unwrap();
        assert_relative_eq!(fit.a, 5.0, max_relative = 1e-10);
        assert_relative_eq!(fit.b, 2.0, max_relative = 1e-10);
        assert_relative_eq!(fit.r2, 1.0, max_relative = 1e-12);
        let p = series(|t| 0.14 / t.powf(1.02), 1.0, 100.0, 20);
        let fit = fit_powerlaw(&p, (1.0, 100.0)).unwrap();
        assert_relative_eq!(fit.a, 0.14, max_relative = 1e-10);
        assert_relative_eq!(fit.b, 1.02, max_relative = 1e-10);
        let fit = fit_powerlaw(&series(|_| 3.0, 1.0, 10.0, 5), (1.0, 10.0)).unwrap();
        assert!(fit.b.abs() < 1e-12);
    }

    #[test]
    fn fit_errors() {
        let p = series(|t| t, 1.0, 10.0, 3);
        assert!(fit_powerlaw(&p, (1.0, 10.0)).is_err());
        let mut p = series(|t| 1.0 / t, 1.0, 10.0, 6);
        p[2].1 = 0.0;
        assert!(fit_powerlaw(&p, (1.0, 10.0)).is_err());
    }

    #[test]
    fn monotone_and_sine_series() {
        let m = oscillation_metric(&series(|t| 1.0 / t, 1.0, 100.0, 30)).unwrap();
        assert_eq!(m.n_extrema, 0);
        let pts: Vec<(f64, f64)> = (1..=200)
            .map(|k| {
                let x = k as f64 / 200.0;
                (1.0 + x, 2.0 + (2.0 * PI * 3.0 * x).sin())
            })
            .collect();
        let om = oscillation_metric(&pts).unwrap();
        assert_eq!(om.n_extrema, 6);
        assert_eq!(om.n_extrema_raw, 6);
        assert!(oscillation_metric(&pts[..7]).is_err());
    }

    #[test]
    fn relative_amplitude_ignores_scale() {
        let pts = series(|t| 1.0 + 0.3 * (3.0 * t.ln()).sin(), 1.0, 100.0, 40);
        let scaled: Vec<(f64, f64)> = pts.iter().map(|p| (p.0, 7.5 * p.1)).collect();
        let a = oscillation_metric(&pts).unwrap().relative_amplitude;
        let b = oscillation_metric(&scaled).unwrap().relative_amplitude;
        assert_relative_eq!(a, b, max_relative = 1e-10);
        assert!(a > 0.3);
    }

    #[test]
    fn plateau_then_landau_zener() {
        // kink at τ = 10, on a decade boundary
        let p = series(|t| if t < 10.0 { 1.0 } else { 100.0 / (t * t) }, 0.01, 1000.0, 51);
        let seg = detect_crossover(&p, &[2.0, 1.0, 0.0], 1.0).unwrap();
        assert_eq!(seg.labels(), vec![0.0, 0.0, 0.0, 2.0, 2.0]);
        assert_eq!(seg.regimes.len(), 2);
        assert_eq!(seg.boundaries, vec![10.0]);
    }

    #[test]
    fn kibble_zurek_then_landau_zener() {
        let p = series(|t| if t < 10.0 { 1.0 / t } else { 10.0 / (t * t) }, 0.1, 1000.0, 41);
        let seg = detect_crossover(&p, &[2.0, 1.0, 0.0], 1.0).unwrap();
        assert_eq!(seg.regimes.iter().map(|r| r.label).collect::<Vec<_>>(), vec![1.0, 2.0]);
        assert!((seg.regimes[0].b - 1.0).abs() < 1e-9);
        assert!(detect_crossover(&p[..20], &[2.0], 1.0).is_err());
    }

    #[test]
    fn local_runs() {
        let p = series(|t| if t < 10.0 { 1.0 / t } else { 10.0 / (t * t) }, 0.1, 1000.0, 41);
        assert!((longest_run(&p, 1.0, 0.1) - 2.0).abs() < 1e-9);
        assert!((longest_run(&p, 2.0, 0.1) - 2.0).abs() < 1e-9);
        assert_eq!(local_exponents(&p).len(), 40);
    }
}
