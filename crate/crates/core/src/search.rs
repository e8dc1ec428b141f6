//! Scalar search helpers shared by the best-response and verification code.

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Largest `x` in `[lo, hi]` with `feasible(x)`, assuming `feasible(lo)` holds
/// and feasibility is monotone (true below a threshold, false above).
pub(crate) fn bisect_boundary<F>(mut lo: f64, mut hi: f64, mut feasible: F) -> f64
where
    F: FnMut(f64) -> bool,
{
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if feasible(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// Golden-section maximization of a unimodal `f` on `[a, b]` down to an
/// interval of width `tol`. Returns the best point evaluated and its value.
pub(crate) fn golden_section_max<F>(mut f: F, mut a: f64, mut b: f64, tol: f64) -> (f64, f64)
where
    F: FnMut(f64) -> f64,
{
    let mut x1 = b - INV_PHI * (b - a);
    let mut x2 = a + INV_PHI * (b - a);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while b - a > tol {
        if f1 >= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - INV_PHI * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + INV_PHI * (b - a);
            f2 = f(x2);
        }
        if x1 >= x2 {
            break;
        }
    }
    if f1 >= f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

/// Index of the maximum, preferring the first on ties. NaN never wins.
pub(crate) fn argmax_first(values: &[f64]) -> usize {
    let mut best = 0;
    for (k, &v) in values.iter().enumerate() {
        if v > values[best] || values[best].is_nan() && !v.is_nan() {
            best = k;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn golden_finds_parabola_peak() {
        let (x, v) = golden_section_max(|x| -(x - 0.3_f64).powi(2) + 2.0, -1.0, 4.0, 1e-10);
        assert!((x - 0.3).abs() < 1e-7);
        assert!((v - 2.0).abs() < 1e-15);
    }

    #[test]
    fn golden_handles_monotone() {
        let (x, _) = golden_section_max(|x| x, 0.0, 1.0, 1e-10);
        assert!(x > 1.0 - 1e-9);
    }

    #[test]
    fn bisection_finds_threshold() {
        let x = bisect_boundary(0.0, 10.0, |x| x * x < 2.0);
        assert!((x - 2f64.sqrt()).abs() < 1e-14);
        assert!(x * x < 2.0);
    }

    #[test]
    fn argmax_prefers_first() {
        assert_eq!(argmax_first(&[1.0, 3.0, 3.0, 2.0]), 1);
        assert_eq!(argmax_first(&[f64::NEG_INFINITY, f64::NEG_INFINITY]), 0);
        assert_eq!(argmax_first(&[f64::NAN, 1.0]), 1);
    }
}
