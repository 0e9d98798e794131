//! Small numerical helpers: evenly spaced grids, trapezoid and adaptive
//! Simpson quadrature, and the linear-interpolation percentile.

use crate::Scalar;

/// `points` evenly spaced values covering `[lo, hi]`, endpoints included.
///
/// A single point degenerates to the midpoint.
pub fn linspace<F: Scalar>(lo: F, hi: F, points: usize) -> Vec<F> {
    match points {
        0 => Vec::new(),
        1 => vec![(lo + hi) / F::lit(2.0)],
        _ => {
            let step = (hi - lo) / F::from_count(points - 1);
            (0..points)
                .map(|i| {
                    if i + 1 == points {
                        hi
                    } else {
                        lo + step * F::from_count(i)
                    }
                })
                .collect()
        }
    }
}

/// Composite trapezoid rule with `nodes` equally spaced nodes on `[lo, hi]`.
pub fn trapezoid<F: Scalar>(lo: F, hi: F, nodes: usize, mut f: impl FnMut(F) -> F) -> F {
    assert!(nodes >= 2, "trapezoid rule needs at least two nodes");
    let xs = linspace(lo, hi, nodes);
    let step = (hi - lo) / F::from_count(nodes - 1);
    let half = F::lit(0.5);
    let mut acc = F::zero();
    for (i, &x) in xs.iter().enumerate() {
        let w = if i == 0 || i + 1 == nodes { half } else { F::one() };
        acc = acc + w * f(x);
    }
    acc * step
}

/// Adaptive Simpson quadrature of `f` over `[lo, hi]` to absolute tolerance `tol`.
pub fn simpson<F: Scalar>(lo: F, hi: F, tol: F, f: &impl Fn(F) -> F) -> F {
    if hi <= lo {
        return F::zero();
    }
    let two = F::lit(2.0);
    let mid = (lo + hi) / two;
    let (flo, fmid, fhi) = (f(lo), f(mid), f(hi));
    let whole = (hi - lo) / F::lit(6.0) * (flo + F::lit(4.0) * fmid + fhi);
    simpson_step(f, lo, hi, flo, fmid, fhi, whole, tol, 48)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step<F: Scalar>(
    f: &impl Fn(F) -> F,
    lo: F,
    hi: F,
    flo: F,
    fmid: F,
    fhi: F,
    whole: F,
    tol: F,
    depth: u32,
) -> F {
    let two = F::lit(2.0);
    let six = F::lit(6.0);
    let four = F::lit(4.0);
    let mid = (lo + hi) / two;
    let lm = (lo + mid) / two;
    let rm = (mid + hi) / two;
    let (flm, frm) = (f(lm), f(rm));
    let left = (mid - lo) / six * (flo + four * flm + fmid);
    let right = (hi - mid) / six * (fmid + four * frm + fhi);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= F::lit(15.0) * tol {
        return left + right + delta / F::lit(15.0);
    }
    let half_tol = tol / two;
    simpson_step(f, lo, mid, flo, flm, fmid, left, half_tol, depth - 1)
        + simpson_step(f, mid, hi, fmid, frm, fhi, right, half_tol, depth - 1)
}

/// Integrates over `[lo, hi]`, splitting at every breakpoint that falls
/// strictly inside so kinks and jumps land on panel edges.
pub fn simpson_split<F: Scalar>(lo: F, hi: F, breaks: &[F], tol: F, f: &impl Fn(F) -> F) -> F {
    let mut cuts: Vec<F> = breaks
        .iter()
        .copied()
        .filter(|&b| b > lo && b < hi)
        .collect();
    cuts.sort_by(|a, b| a.partial_cmp(b).expect("NaN breakpoint"));
    cuts.dedup();
    let pieces = F::from_count(cuts.len() + 1);
    let mut acc = F::zero();
    let mut left = lo;
    for c in cuts.into_iter().chain(std::iter::once(hi)) {
        acc = acc + simpson(left, c, tol / pieces, f);
        left = c;
    }
    acc
}

/// Percentile `p` in `[0, 1]` with linear interpolation between order
/// statistics (position `(m - 1) p` in the sorted sample).
///
/// Returns `None` for an empty input.
pub fn percentile<F: Scalar>(values: &[F], p: F) -> Option<F> {
    if values.is_empty() {
        return None;
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("NaN in percentile input"));
    let pos = p * F::from_count(sorted.len() - 1);
    let lower = pos.floor();
    let idx = lower.to_usize().unwrap_or(0).min(sorted.len() - 1);
    if idx + 1 >= sorted.len() {
        return Some(sorted[idx]);
    }
    let frac = pos - lower;
    Some(sorted[idx] + frac * (sorted[idx + 1] - sorted[idx]))
}
