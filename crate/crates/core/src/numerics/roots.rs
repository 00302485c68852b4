//! Bracketing root search and sign-change scanning for scalar functions of
//! one variable.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RootError {
    #[error("no sign change on [{lo}, {hi}] (f = {f_lo:e}, {f_hi:e})")]
    NotBracketed { lo: f64, hi: f64, f_lo: f64, f_hi: f64 },
}

/// Bisects `f` on `[lo, hi]` until the bracket is narrower than `width`.
/// Returns the final bracket `(a, b)` with `f(a)` and `f(b)` of opposite
/// sign (or one of them exactly zero).
pub fn bisect<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, width: f64) -> Result<(f64, f64), RootError> {
    let (mut a, mut b) = (lo, hi);
    let mut fa = f(a);
    let fb = f(b);
    if fa == 0.0 {
        return Ok((a, a));
    }
    if fb == 0.0 {
        return Ok((b, b));
    }
    if fa.signum() == fb.signum() {
        return Err(RootError::NotBracketed { lo, hi, f_lo: fa, f_hi: fb });
    }
    while b - a > width {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        let fm = f(m);
        if fm == 0.0 {
            return Ok((m, m));
        }
        if fm.signum() == fa.signum() {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    Ok((a, b))
}

/// Midpoint of the final bisection bracket.
pub fn find_root<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, width: f64) -> Result<f64, RootError> {
    bisect(f, lo, hi, width).map(|(a, b)| 0.5 * (a + b))
}

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Golden-section search for the maximum of a unimodal `f` on `[lo, hi]`.
pub fn golden_max<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, width: f64) -> (f64, f64) {
    let (mut a, mut b) = (lo, hi);
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while b - a > width {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    if fc > fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

/// Locates the zeros of `f` on `[lo, hi]` where it changes sign.
///
/// `f` is sampled on a uniform grid of `cells` cells; every sign change is
/// refined by bisection to `width`. Local extrema of the samples that stay on
/// one side of zero are probed with a golden-section search so that short
/// excursions across zero between two grid points are not lost.
pub fn sign_changes<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, cells: usize, width: f64) -> Vec<f64> {
    let cells = cells.max(1);
    let h = (hi - lo) / cells as f64;
    let ts: Vec<f64> = (0..=cells)
        .map(|k| if k == cells { hi } else { lo + h * k as f64 })
        .collect();
    let vs: Vec<f64> = ts.iter().map(|&t| f(t)).collect();
    let mut roots = Vec::new();

    let push_root = |a: f64, b: f64, roots: &mut Vec<f64>| {
        if let Ok(r) = find_root(&f, a, b, width) {
            roots.push(r);
        }
    };

    for k in 0..cells {
        let (v0, v1) = (vs[k], vs[k + 1]);
        if v0 == 0.0 {
            if k > 0 {
                roots.push(ts[k]);
            }
            continue;
        }
        if v1 != 0.0 && v0.signum() != v1.signum() {
            push_root(ts[k], ts[k + 1], &mut roots);
            continue;
        }
        // Grazing check on interior extrema: [k-1, k+1] around sample k.
        if k == 0 {
            continue;
        }
        let vp = vs[k - 1];
        let same_side = vp.signum() == v0.signum() && v1.signum() == v0.signum();
        if !same_side {
            continue;
        }
        let (a, b) = (ts[k - 1], ts[k + 1]);
        if v0 < 0.0 && v0 >= vp && v0 >= v1 {
            let (tm, fm) = golden_max(&f, a, b, width.max(1e-3 * h));
            if fm > 0.0 {
                push_root(a, tm, &mut roots);
                push_root(tm, b, &mut roots);
            }
        } else if v0 > 0.0 && v0 <= vp && v0 <= v1 {
            let (tm, fm) = golden_max(|t| -f(t), a, b, width.max(1e-3 * h));
            if fm > 0.0 {
                push_root(a, tm, &mut roots);
                push_root(tm, b, &mut roots);
            }
        }
    }
    roots.sort_by(f64::total_cmp);
    roots.dedup_by(|x, y| (*x - *y).abs() <= width);
    roots
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bisect_brackets_sqrt2() {
        let (a, b) = bisect(|x| x * x - 2.0, 0.0, 2.0, 1e-12).unwrap();
        assert!(b - a <= 1e-12);
        assert!(a <= 2f64.sqrt() && 2f64.sqrt() <= b);
    }

    #[test]
    fn bisect_rejects_unbracketed() {
        assert!(matches!(
            bisect(|x| x * x + 1.0, -1.0, 1.0, 1e-6),
            Err(RootError::NotBracketed { .. })
        ));
    }

    #[test]
    fn golden_section_finds_peak() {
        let (x, fx) = golden_max(|x| -(x - 0.3) * (x - 0.3), 0.0, 1.0, 1e-10);
        assert!((x - 0.3).abs() < 1e-8);
        assert!(fx.abs() < 1e-15);
    }

    #[test]
    fn scan_finds_all_sine_zeros() {
        let roots = sign_changes(f64::sin, 0.5, 10.0, 50, 1e-12);
        assert_eq!(roots.len(), 3);
        for (r, k) in roots.iter().zip(1..) {
            assert!((r - k as f64 * std::f64::consts::PI).abs() < 1e-11);
        }
    }

    #[test]
    fn scan_catches_excursion_between_samples() {
        // positive only on (0.501, 0.503), far narrower than the 0.1 grid
        let f = |t: f64| 1e-6 - (t - 0.502) * (t - 0.502);
        let roots = sign_changes(f, 0.0, 1.0, 10, 1e-12);
        assert_eq!(roots.len(), 2);
        assert!((roots[0] - 0.501).abs() < 1e-9);
        assert!((roots[1] - 0.503).abs() < 1e-9);
    }
}
