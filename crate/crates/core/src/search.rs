//! Golden-section maximization of a unimodal scalar function.

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Maximizes `f` on `[lo, hi]` until the bracket is narrower than `tol` (or
/// than rounding allows). Returns the best point seen, endpoints included.
pub(crate) fn golden_section_max<F>(mut f: F, mut lo: f64, mut hi: f64, tol: f64) -> (f64, f64)
where
    F: FnMut(f64) -> f64,
{
    let (f_lo, f_hi) = (f(lo), f(hi));
    let mut best = if f_lo >= f_hi { (lo, f_lo) } else { (hi, f_hi) };

    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while hi - lo > tol && hi - lo > 4.0 * f64::EPSILON * hi.abs().max(lo.abs()) {
        if f1 >= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = f(x2);
        }
    }
    for (x, fx) in [(x1, f1), (x2, f2)] {
        if fx > best.1 {
            best = (x, fx);
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_parabola_peak() {
        let (x, fx) = golden_section_max(|x| -(x - 1.3) * (x - 1.3) + 2.0, 0.0, 5.0, 1e-10);
        assert!((x - 1.3).abs() < 1e-5);
        assert!((fx - 2.0).abs() < 1e-10);
    }

    #[test]
    fn boundary_maximum() {
        let (x, fx) = golden_section_max(|x| -x, 0.0, 1.0, 1e-10);
        assert_eq!(x, 0.0);
        assert_eq!(fx, 0.0);
    }
}
