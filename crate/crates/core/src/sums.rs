//! Fast evaluation of weighted kernel sums `sum_i w_i P(x - X_i)` for a
//! piecewise polynomial `P`.
//!
//! The data are sorted once. For every anchor point `c` on a regular lattice
//! we store signed cumulative power sums `sum w_i (X_i - c)^k`, accumulated
//! outward from `c`. A query at `x` picks the nearest anchor, locates each
//! piece's data range by binary search and expands the piece polynomial in
//! powers of `X_i - c`. Because the cumulative sums start at the anchor, the
//! range sums only involve nearby points and keep full relative accuracy
//! even for narrow bandwidths.

use crate::poly::{binomial, PiecewisePoly};
use crate::Scalar;

const ANCHOR_SPACING: f64 = 1.0 / 16.0;
const MAX_WIDTH: usize = 8;

#[derive(Debug, Clone)]
pub struct KernelSums<F> {
    xs: Vec<F>,
    ws: Vec<F>,
    origin: F,
    spacing: F,
    /// Per anchor: origin index and signed cumulative sums, `(n + 1) * width`.
    anchors: Vec<(F, usize)>,
    cum: Vec<F>,
    width: usize,
    binom: Vec<Vec<F>>,
}

impl<F: Scalar> KernelSums<F> {
    /// Unit weights.
    pub fn new(data: &[F], max_degree: usize) -> Self {
        Self::weighted(data, &vec![F::one(); data.len()], max_degree)
    }

    pub fn weighted(data: &[F], weights: &[F], max_degree: usize) -> Self {
        assert_eq!(data.len(), weights.len(), "one weight per observation");
        let mut idx: Vec<usize> = (0..data.len()).collect();
        idx.sort_by(|&a, &b| data[a].partial_cmp(&data[b]).expect("NaN in sample"));
        let xs: Vec<F> = idx.iter().map(|&i| data[i]).collect();
        let ws: Vec<F> = idx.iter().map(|&i| weights[i]).collect();

        let width = max_degree + 1;
        assert!(width <= MAX_WIDTH, "kernel sums support degree < {MAX_WIDTH}");
        let n = xs.len();
        let spacing = F::lit(ANCHOR_SPACING);
        let (lo, hi) = match (xs.first(), xs.last()) {
            (Some(&a), Some(&b)) => (a, b),
            _ => (F::zero(), F::zero()),
        };
        let count = ((hi - lo) / spacing).ceil().to_usize().unwrap_or(0) + 1;

        let mut anchors = Vec::with_capacity(count);
        let mut cum = vec![F::zero(); count * (n + 1) * width];
        for a in 0..count {
            let c = lo + spacing * F::from_count(a);
            let m = xs.partition_point(|&x| x < c);
            anchors.push((c, m));
            let base = a * (n + 1) * width;
            // right of the anchor: P(i) = sum_{m <= j < i}
            for i in m..n {
                let y = xs[i] - c;
                let mut p = ws[i];
                for k in 0..width {
                    let prev = cum[base + i * width + k];
                    cum[base + (i + 1) * width + k] = prev + p;
                    p = p * y;
                }
            }
            // left of the anchor: P(i) = -sum_{i <= j < m}
            for i in (0..m).rev() {
                let y = xs[i] - c;
                let mut p = ws[i];
                for k in 0..width {
                    let prev = cum[base + (i + 1) * width + k];
                    cum[base + i * width + k] = prev - p;
                    p = p * y;
                }
            }
        }
        let binom = (0..width)
            .map(|j| (0..width).map(|k| F::from_count(binomial(j, k))).collect())
            .collect();
        KernelSums {
            xs,
            ws,
            origin: lo,
            spacing,
            anchors,
            cum,
            width,
            binom,
        }
    }

    pub fn len(&self) -> usize {
        self.xs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xs.is_empty()
    }

    pub fn max_degree(&self) -> usize {
        self.width - 1
    }

    /// Sorted data.
    pub fn data(&self) -> &[F] {
        &self.xs
    }

    /// Weights aligned with [`KernelSums::data`].
    pub fn weights(&self) -> &[F] {
        &self.ws
    }

    /// `sum_i w_i p(x - X_i)` (not normalised).
    pub fn sum(&self, p: &PiecewisePoly<F>, x: F) -> F {
        if self.xs.is_empty() {
            return F::zero();
        }
        assert!(
            p.max_degree() < self.width,
            "kernel degree exceeds the stored power sums"
        );
        let a = ((x - self.origin) / self.spacing)
            .round()
            .max(F::zero())
            .to_usize()
            .unwrap_or(0)
            .min(self.anchors.len() - 1);
        let (c, _) = self.anchors[a];
        let base = a * (self.xs.len() + 1) * self.width;
        let d = x - c;

        let mut total = F::zero();
        let mut cached: Option<(F, usize)> = None;
        let mut expanded = [F::zero(); MAX_WIDTH];
        let mut dpow = [F::one(); MAX_WIDTH];
        for k in 1..self.width {
            dpow[k] = dpow[k - 1] * d;
        }
        for piece in p.pieces() {
            // u = x - X in (lo, hi]  <=>  X in [x - hi, x - lo)
            let left = x - piece.hi;
            let right = x - piece.lo;
            let i0 = self.xs.partition_point(|&v| v < left);
            let i1 = match cached {
                Some((v, i)) if v == right => i,
                _ => self.xs.partition_point(|&v| v < right),
            };
            cached = Some((left, i0));
            if i1 <= i0 {
                continue;
            }
            let cs = piece.poly.coef();
            let deg = cs.len();
            // p(d - y) = sum_k e_k y^k, e_k = (-1)^k sum_{j >= k} p_j C(j, k) d^(j - k)
            for (k, e) in expanded.iter_mut().enumerate().take(deg) {
                let mut acc = F::zero();
                for (j, &pj) in cs.iter().enumerate().skip(k) {
                    acc = acc + pj * self.binom[j][k] * dpow[j - k];
                }
                *e = if k % 2 == 0 { acc } else { -acc };
            }
            let lo_off = base + i0 * self.width;
            let hi_off = base + i1 * self.width;
            for (k, &e) in expanded.iter().enumerate().take(deg) {
                total = total + e * (self.cum[hi_off + k] - self.cum[lo_off + k]);
            }
        }
        total
    }

    /// Reference loop over every observation, for testing.
    pub fn sum_naive(&self, p: &PiecewisePoly<F>, x: F) -> F {
        self.xs
            .iter()
            .zip(&self.ws)
            .map(|(&xi, &w)| w * p.eval(x - xi))
            .sum()
    }
}
