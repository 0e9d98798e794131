//! Candidate bandwidth grids, the per-grid kernel cache, and the
//! comparison-based selection rule shared by every estimator in the crate.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::kernels::Kernel;
use crate::poly::PiecewisePoly;
use crate::Scalar;

/// Finite ordered set of candidate bandwidths.
#[derive(Debug, Clone, PartialEq)]
pub struct BandwidthGrid<F> {
    values: Vec<F>,
}

impl<F: Scalar> BandwidthGrid<F> {
    /// `{1/k : k = 1, ..., floor(sqrt(n))}`, largest bandwidth first.
    pub fn reciprocal(n: usize) -> Result<Self> {
        let kmax = (n as f64).sqrt().floor() as usize;
        Self::from_ks(1..=kmax)
    }

    /// `1/k` for the listed `k`.
    pub fn from_ks(ks: impl IntoIterator<Item = usize>) -> Result<Self> {
        Self::new(
            ks.into_iter()
                .filter(|&k| k > 0)
                .map(|k| F::one() / F::from_count(k))
                .collect(),
        )
    }

    /// Any list of positive bandwidths; duplicates are dropped and the grid
    /// is stored in decreasing order.
    pub fn new(mut values: Vec<F>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptyGrid);
        }
        for &v in &values {
            crate::kernels::check_bandwidth(v)?;
        }
        values.sort_by(|a, b| b.partial_cmp(a).expect("NaN bandwidth"));
        values.dedup();
        Ok(BandwidthGrid { values })
    }

    /// Restricts `{1/k}` to `k` in `[lower, upper]`.
    pub fn clipped(n: usize, lower: F, upper: F) -> Result<Self> {
        let kmax = (n as f64).sqrt().floor() as usize;
        Self::from_ks((1..=kmax).filter(|&k| {
            let kf = F::from_count(k);
            kf >= lower && kf <= upper
        }))
    }

    pub fn values(&self) -> &[F] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn max(&self) -> F {
        self.values[0]
    }

    pub fn min(&self) -> F {
        self.values[self.values.len() - 1]
    }

    /// Position of `b` in the grid. Bandwidths are compared with a relative
    /// tolerance of `1e-12` so `1.0 / k` computed elsewhere still matches.
    pub fn index_of(&self, b: F) -> Result<usize> {
        let tol = F::lit(1e-12);
        self.values
            .iter()
            .position(|&v| (v - b).abs() <= tol * v)
            .ok_or_else(|| Error::NotInGrid(b.as_f64()))
    }
}

/// Dilated kernels and every pairwise convolution over one grid.
///
/// Building it is a one-off symbolic computation; afterwards every estimate
/// is a sum of closed-form piecewise polynomials.
#[derive(Debug)]
pub struct KernelBank<F> {
    kernel: Kernel<F>,
    grid: BandwidthGrid<F>,
    singles: Vec<PiecewisePoly<F>>,
    pairs: Vec<PiecewisePoly<F>>,
}

impl<F: Scalar> KernelBank<F> {
    pub fn new(kernel: Kernel<F>, grid: BandwidthGrid<F>) -> Result<Arc<Self>> {
        let m = grid.len();
        let singles = grid
            .values()
            .iter()
            .map(|&b| kernel.scaled(b))
            .collect::<Result<Vec<_>>>()?;
        let mut pairs = Vec::with_capacity(m * (m + 1) / 2);
        for i in 0..m {
            for j in i..m {
                pairs.push(kernel.pair(grid.values()[i], grid.values()[j])?);
            }
        }
        Ok(Arc::new(KernelBank {
            kernel,
            grid,
            singles,
            pairs,
        }))
    }

    pub fn kernel(&self) -> &Kernel<F> {
        &self.kernel
    }

    pub fn grid(&self) -> &BandwidthGrid<F> {
        &self.grid
    }

    /// `K_b` for the `i`-th grid bandwidth.
    pub fn single(&self, i: usize) -> &PiecewisePoly<F> {
        &self.singles[i]
    }

    /// `K_b * K_b'`; symmetric in its indices by construction.
    pub fn pair(&self, i: usize, j: usize) -> &PiecewisePoly<F> {
        let (i, j) = if i <= j { (i, j) } else { (j, i) };
        let m = self.grid.len();
        // row-major upper triangle
        let offset = i * m - i * i.saturating_sub(1) / 2;
        &self.pairs[offset + (j - i)]
    }

    /// Highest polynomial degree among the cached kernels.
    pub fn max_degree(&self) -> usize {
        self.pairs
            .iter()
            .chain(&self.singles)
            .map(PiecewisePoly::max_degree)
            .max()
            .unwrap_or(0)
    }
}

/// Outcome of a comparison-based bandwidth selection.
#[derive(Debug, Clone, PartialEq)]
pub struct Selection<F> {
    /// Index of the chosen bandwidth in the grid.
    pub index: usize,
    /// Bias proxy per bandwidth, `max_b' {D(b, b') - pen(b')}_+`.
    pub bias: Vec<F>,
    /// `bias + pen` per bandwidth; minimal at `index`.
    pub criterion: Vec<F>,
}

/// Generic comparison rule: with squared discrepancies `D(b, b')` and
/// penalties `pen(b')`, the bias proxy of `b` is
/// `max_b' {D(b, b') - pen(b')}_+` and the chosen bandwidth minimises
/// `bias(b) + pen(b)`. Ties go to the largest bandwidth.
pub fn select<F: Scalar>(
    grid: &BandwidthGrid<F>,
    penalty: &[F],
    mut discrepancy: impl FnMut(usize, usize) -> F,
) -> Selection<F> {
    let m = grid.len();
    assert_eq!(penalty.len(), m, "one penalty per bandwidth");
    let mut bias = vec![F::zero(); m];
    for (i, slot) in bias.iter_mut().enumerate() {
        let mut worst = F::zero();
        for (j, &pen) in penalty.iter().enumerate() {
            let v = discrepancy(i, j) - pen;
            if v > worst {
                worst = v;
            }
        }
        *slot = worst;
    }
    let criterion: Vec<F> = bias.iter().zip(penalty).map(|(&a, &p)| a + p).collect();
    let index = argmin_largest(grid, &criterion);
    Selection {
        index,
        bias,
        criterion,
    }
}

/// Index minimising `values`, preferring the largest bandwidth on ties.
pub fn argmin_largest<F: Scalar>(grid: &BandwidthGrid<F>, values: &[F]) -> usize {
    let mut best = 0;
    for i in 1..values.len() {
        let better = values[i] < values[best]
            || (values[i] == values[best] && grid.values()[i] > grid.values()[best]);
        if better {
            best = i;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reciprocal_grid() {
        let g = BandwidthGrid::<f64>::reciprocal(2000).unwrap();
        assert_eq!(g.len(), 44);
        assert_eq!(g.max(), 1.0);
        assert_eq!(g.min(), 1.0 / 44.0);
        assert_eq!(g.index_of(1.0 / 20.0).unwrap(), 19);
        assert!(matches!(g.index_of(0.3), Err(Error::NotInGrid(_))));
        assert!(BandwidthGrid::<f64>::reciprocal(0).is_err());
        assert_eq!(BandwidthGrid::<f64>::reciprocal(3).unwrap().len(), 1);
    }

    #[test]
    fn clipping() {
        let g = BandwidthGrid::<f64>::clipped(2000, 7.6, 30.0).unwrap();
        assert_eq!(g.max(), 1.0 / 8.0);
        assert_eq!(g.min(), 1.0 / 30.0);
        assert!(matches!(
            BandwidthGrid::<f64>::clipped(2000, 7.6, 3.0),
            Err(Error::EmptyGrid)
        ));
    }

    #[test]
    fn bank_pair_indexing_is_symmetric_and_complete() {
        let grid = BandwidthGrid::<f64>::reciprocal(50).unwrap();
        let k = Kernel::triangular();
        let bank = KernelBank::new(k.clone(), grid.clone()).unwrap();
        for i in 0..grid.len() {
            for j in 0..grid.len() {
                let direct = k.pair(grid.values()[i], grid.values()[j]).unwrap();
                assert_eq!(bank.pair(i, j), &direct, "({i}, {j})");
            }
        }
        assert_eq!(bank.max_degree(), 3);
    }

    #[test]
    fn select_prefers_largest_on_ties() {
        let grid = BandwidthGrid::<f64>::from_ks([1, 2, 3]).unwrap();
        let sel = select(&grid, &[1.0, 1.0, 1.0], |_, _| 0.0);
        assert_eq!(sel.index, 0);
        let sel = select(&grid, &[3.0, 2.0, 1.0], |_, _| 0.0);
        assert_eq!(sel.index, 2);
        assert!(sel.bias.iter().all(|&a| a == 0.0));
    }
}
