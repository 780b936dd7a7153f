//! Small numerical kernels shared by the thermodynamic modules: log-domain
//! accumulation, bracketing root finders, golden-section minimization, lower
//! convex hulls and least-squares lines.

use crate::error::{Error, Result};

/// `log(sum(exp(x_i)))` over a slice. Returns `-inf` for an empty slice.
pub fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    if max == f64::INFINITY {
        return f64::INFINITY;
    }
    let sum: f64 = values.iter().map(|v| (v - max).exp()).sum();
    max + sum.ln()
}

/// `log(exp(a) + exp(b))`.
pub fn log_add(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    if hi == f64::INFINITY {
        return hi;
    }
    hi + (lo - hi).exp().ln_1p()
}

/// Streaming log-domain accumulator with compensated summation of the
/// rescaled terms.
///
/// Terms are kept relative to a running maximum so that sums of `exp` values
/// far outside the `f64` range stay finite.
#[derive(Clone, Copy, Debug)]
pub struct LogAccumulator {
    shift: f64,
    sum: f64,
    compensation: f64,
}

impl Default for LogAccumulator {
    fn default() -> Self {
        Self::new()
    }
}

impl LogAccumulator {
    pub fn new() -> Self {
        Self { shift: f64::NEG_INFINITY, sum: 0.0, compensation: 0.0 }
    }

    pub fn push(&mut self, log_term: f64) {
        if log_term == f64::NEG_INFINITY {
            return;
        }
        if log_term > self.shift {
            let factor = if self.shift == f64::NEG_INFINITY { 0.0 } else { (self.shift - log_term).exp() };
            self.sum *= factor;
            self.compensation *= factor;
            self.shift = log_term;
        }
        let term = (log_term - self.shift).exp();
        // Neumaier summation
        let t = self.sum + term;
        if self.sum.abs() >= term.abs() {
            self.compensation += (self.sum - t) + term;
        } else {
            self.compensation += (term - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn merge(&mut self, other: &LogAccumulator) {
        if other.shift == f64::NEG_INFINITY {
            return;
        }
        let total = other.sum + other.compensation;
        self.push(other.shift + total.ln());
    }

    /// Log of the accumulated sum; `-inf` when nothing positive was pushed.
    pub fn value(&self) -> f64 {
        if self.shift == f64::NEG_INFINITY {
            return f64::NEG_INFINITY;
        }
        self.shift + (self.sum + self.compensation).ln()
    }
}

/// Bisection on a bracketing interval until the bracket is narrower than
/// `x_tol` or `|f| <= f_tol`.
pub fn bisect<F: FnMut(f64) -> f64>(mut f: F, mut lo: f64, mut hi: f64, x_tol: f64, f_tol: f64) -> Result<f64> {
    let mut f_lo = f(lo);
    let f_hi = f(hi);
    if f_lo == 0.0 {
        return Ok(lo);
    }
    if f_hi == 0.0 {
        return Ok(hi);
    }
    if f_lo.signum() == f_hi.signum() {
        return Err(Error::NoSignChange { lo, hi });
    }
    for _ in 0..400 {
        let mid = 0.5 * (lo + hi);
        let f_mid = f(mid);
        if f_mid.abs() <= f_tol || (hi - lo) <= x_tol {
            return Ok(mid);
        }
        if f_mid.signum() == f_lo.signum() {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Golden-section search for the minimum of a unimodal function on `[a, b]`.
/// Returns `(argmin, min)`.
pub fn golden_section_min<F: FnMut(f64) -> f64>(mut f: F, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    let mut iterations = 0;
    while (b - a).abs() > tol && iterations < 300 {
        if fc < fd {
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
        iterations += 1;
    }
    let x = 0.5 * (a + b);
    let fx = f(x);
    [(x, fx), (c, fc), (d, fd)]
        .into_iter()
        .fold((x, fx), |best, cand| if cand.1 < best.1 { cand } else { best })
}

/// Lower convex hull of the points `(x_i, y_i)` (x strictly increasing),
/// evaluated back at every `x_i`.
pub fn lower_convex_envelope(xs: &[f64], ys: &[f64]) -> Vec<f64> {
    assert_eq!(xs.len(), ys.len());
    let n = xs.len();
    if n <= 2 {
        return ys.to_vec();
    }
    let mut hull: Vec<usize> = Vec::with_capacity(n);
    for i in 0..n {
        while hull.len() >= 2 {
            let a = hull[hull.len() - 2];
            let b = hull[hull.len() - 1];
            // drop b if it lies on or above the chord a -> i
            let cross = (xs[b] - xs[a]) * (ys[i] - ys[a]) - (ys[b] - ys[a]) * (xs[i] - xs[a]);
            if cross <= 0.0 {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(i);
    }
    let mut out = Vec::with_capacity(n);
    let mut seg = 0;
    for i in 0..n {
        while seg + 1 < hull.len() - 1 && xs[hull[seg + 1]] <= xs[i] {
            seg += 1;
        }
        let a = hull[seg];
        let b = hull[(seg + 1).min(hull.len() - 1)];
        if a == b || xs[i] == xs[a] {
            out.push(ys[a].min(ys[i]));
        } else if xs[i] == xs[b] {
            out.push(ys[b]);
        } else {
            let t = (xs[i] - xs[a]) / (xs[b] - xs[a]);
            out.push(ys[a] + t * (ys[b] - ys[a]));
        }
    }
    out
}

/// Ordinary least-squares line `y = intercept + slope * x`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    /// Root-mean-square residual.
    pub rms_residual: f64,
}

pub fn fit_line(xs: &[f64], ys: &[f64]) -> Result<LineFit> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(Error::Degenerate("line fit needs at least two points".into()));
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return Err(Error::Degenerate("line fit with constant abscissa".into()));
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = xs.iter().zip(ys).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
    Ok(LineFit { slope, intercept, rms_residual: (rss / n).sqrt() })
}

/// Evenly spaced grid with `steps` points from `min` to `max` inclusive.
pub fn linspace(min: f64, max: f64, steps: usize) -> Vec<f64> {
    match steps {
        0 => Vec::new(),
        1 => vec![min],
        _ => (0..steps).map(|i| min + (max - min) * i as f64 / (steps - 1) as f64).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_sum_exp_handles_huge_terms() {
        let v = log_sum_exp(&[1000.0, 1000.0]);
        assert!((v - (1000.0 + 2f64.ln())).abs() < 1e-12);
        assert_eq!(log_sum_exp(&[]), f64::NEG_INFINITY);
    }

    #[test]
    fn accumulator_matches_direct_sum() {
        let mut acc = LogAccumulator::new();
        for x in [0.1f64, 0.2, 0.3, 0.4] {
            acc.push(x.ln());
        }
        assert!((acc.value() - 1.0f64.ln()).abs() < 1e-15);
        let mut other = LogAccumulator::new();
        other.push(0.0);
        acc.merge(&other);
        assert!((acc.value() - 2f64.ln()).abs() < 1e-15);
        assert_eq!(LogAccumulator::new().value(), f64::NEG_INFINITY);
    }

    #[test]
    fn bisect_finds_sqrt2() {
        let r = bisect(|x| x * x - 2.0, 0.0, 2.0, 1e-14, 0.0).unwrap();
        assert!((r - 2f64.sqrt()).abs() < 1e-12);
        assert!(bisect(|x| x * x + 1.0, -1.0, 1.0, 1e-9, 0.0).is_err());
    }

    #[test]
    fn golden_section_parabola() {
        let (x, fx) = golden_section_min(|x| (x - 0.3).powi(2) + 1.0, -2.0, 2.0, 1e-10);
        assert!((x - 0.3).abs() < 1e-6);
        assert!((fx - 1.0).abs() < 1e-14);
    }

    #[test]
    fn convex_envelope_removes_bump() {
        let xs = [0.0, 1.0, 2.0, 3.0];
        let ys = [0.0, 2.0, 1.0, 3.0];
        let env = lower_convex_envelope(&xs, &ys);
        assert_eq!(env[0], 0.0);
        assert!((env[1] - 0.5).abs() < 1e-15);
        assert_eq!(env[2], 1.0);
        assert_eq!(env[3], 3.0);
    }

    #[test]
    fn line_fit_exact() {
        let fit = fit_line(&[0.0, 1.0, 2.0], &[1.0, 3.0, 5.0]).unwrap();
        assert!((fit.slope - 2.0).abs() < 1e-15);
        assert!((fit.intercept - 1.0).abs() < 1e-15);
        assert!(fit.rms_residual < 1e-15);
    }
}
