//! Small shared numerical helpers.

/// Integrate sampled data (t_i, f_i) with composite Simpson where adjacent
/// interval pairs are uniform, falling back to the trapezoid rule for odd or
/// non-uniform tails. Trajectory arcs are uniform except for the final
/// event-localized interval, so Simpson covers essentially everything.
pub fn integrate_samples(ts: &[f64], fs: &[f64]) -> f64 {
    assert_eq!(ts.len(), fs.len());
    if ts.len() < 2 {
        return 0.0;
    }
    let mut total = 0.0;
    let mut i = 0;
    while i + 1 < ts.len() {
        if i + 2 < ts.len() {
            let h1 = ts[i + 1] - ts[i];
            let h2 = ts[i + 2] - ts[i + 1];
            if (h1 - h2).abs() <= 1e-9 * h1.abs().max(h2.abs()) {
                total += h1 / 3.0 * (fs[i] + 4.0 * fs[i + 1] + fs[i + 2]);
                i += 2;
                continue;
            }
        }
        total += 0.5 * (ts[i + 1] - ts[i]) * (fs[i] + fs[i + 1]);
        i += 1;
    }
    total
}

/// Bisection root finder for f on [lo, hi] with f(lo)·f(hi) < 0.
/// Returns the midpoint once the bracket is below `xtol`.
pub fn bisect<F: FnMut(f64) -> f64>(mut f: F, mut lo: f64, mut hi: f64, xtol: f64) -> f64 {
    let mut flo = f(lo);
    debug_assert!(flo * f(hi) <= 0.0);
    while hi - lo > xtol {
        let mid = 0.5 * (lo + hi);
        let fmid = f(mid);
        if fmid == 0.0 {
            return mid;
        }
        if flo * fmid < 0.0 {
            hi = mid;
        } else {
            lo = mid;
            flo = fmid;
        }
    }
    0.5 * (lo + hi)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simpson_is_exact_for_cubics() {
        let ts: Vec<f64> = (0..=10).map(|i| i as f64 * 0.5).collect();
        let fs: Vec<f64> = ts.iter().map(|t| t.powi(3) - 2.0 * t + 1.0).collect();
        let exact = 5.0f64.powi(4) / 4.0 - 25.0 + 5.0;
        assert!((integrate_samples(&ts, &fs) - exact).abs() < 1e-10);
    }

    #[test]
    fn handles_nonuniform_tail() {
        let ts = [0.0, 1.0, 2.0, 2.3];
        let fs = [1.0, 1.0, 1.0, 1.0];
        assert!((integrate_samples(&ts, &fs) - 2.3).abs() < 1e-12);
    }

    #[test]
    fn bisect_finds_sqrt2() {
        let r = bisect(|x| x * x - 2.0, 0.0, 2.0, 1e-12);
        assert!((r - 2f64.sqrt()).abs() < 1e-11);
    }
}
