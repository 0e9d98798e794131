use std::sync::Arc;

use crate::bandwidth::KernelBank;
use crate::sums::KernelSums;
use crate::Scalar;

/// A (possibly weighted) sample bound to a kernel bank: evaluates
/// `n^-1 sum w_i K_b(x - X_i)` and `n^-1 sum w_i (K_b * K_b')(x - X_i)` for
/// any grid bandwidths.
#[derive(Debug, Clone)]
pub struct Smoother<F> {
    bank: Arc<KernelBank<F>>,
    sums: KernelSums<F>,
    scale: F,
}

impl<F: Scalar> Smoother<F> {
    pub fn new(bank: Arc<KernelBank<F>>, data: &[F]) -> Self {
        let sums = KernelSums::new(data, bank.max_degree());
        Self::from_sums(bank, sums)
    }

    pub fn weighted(bank: Arc<KernelBank<F>>, data: &[F], weights: &[F]) -> Self {
        let sums = KernelSums::weighted(data, weights, bank.max_degree());
        Self::from_sums(bank, sums)
    }

    fn from_sums(bank: Arc<KernelBank<F>>, sums: KernelSums<F>) -> Self {
        let scale = if sums.is_empty() {
            F::zero()
        } else {
            F::one() / F::from_count(sums.len())
        };
        Smoother { bank, sums, scale }
    }

    pub fn bank(&self) -> &Arc<KernelBank<F>> {
        &self.bank
    }

    pub fn len(&self) -> usize {
        self.sums.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sums.is_empty()
    }

    /// Sorted sample.
    pub fn data(&self) -> &[F] {
        self.sums.data()
    }

    pub fn weights(&self) -> &[F] {
        self.sums.weights()
    }

    /// Estimate with the `i`-th grid bandwidth at `x`.
    pub fn single(&self, i: usize, x: F) -> F {
        self.sums.sum(self.bank.single(i), x) * self.scale
    }

    /// Pair estimate `K_b * K_b'` for grid indices `(i, j)` at `x`.
    pub fn pair(&self, i: usize, j: usize, x: F) -> F {
        self.sums.sum(self.bank.pair(i, j), x) * self.scale
    }

    /// Every single estimate at `x`, in grid order.
    pub fn singles(&self, x: F) -> Vec<F> {
        (0..self.bank.grid().len()).map(|i| self.single(i, x)).collect()
    }

    /// Full symmetric matrix of pair estimates at `x` (row-major).
    pub fn pairs(&self, x: F) -> Vec<F> {
        let m = self.bank.grid().len();
        let mut out = vec![F::zero(); m * m];
        for i in 0..m {
            for j in i..m {
                let v = self.pair(i, j, x);
                out[i * m + j] = v;
                out[j * m + i] = v;
            }
        }
        out
    }
}
