//! Mixing proportion: reflection of the auxiliary sample around 1, kernel
//! estimate of the reflected density, twice-the-average over
//! `[1 - delta, 1 + delta]`, truncation, sup-norm bandwidth choice and the
//! counting baseline.

use std::sync::Arc;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::bandwidth::{self, KernelBank, Selection};
use crate::error::{Error, Result};
use crate::kernels::{check_bandwidth, Kernel};
use crate::quad;
use crate::smoother::Smoother;
use crate::Scalar;

/// Auxiliary sample reflected to `[0, 2]` by independent fair coin flips.
#[derive(Debug, Clone, PartialEq)]
pub struct SymSample<F> {
    pub y: Vec<F>,
    pub source_seed: u64,
}

impl<F: Scalar> SymSample<F> {
    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ThetaEstimate<F> {
    pub theta_raw: F,
    pub theta_tilde: F,
    pub b_selected: F,
    pub truncated: bool,
}

/// Keeps `x` when the `i`-th flip is heads, otherwise maps it to `2 - x`.
/// Flip `i` is the low bit of the `i`-th word of a ChaCha8 stream keyed by
/// `seed`, so it depends only on `(seed, i)`.
pub fn symmetrize<F: Scalar>(sample2: &[F], seed: u64) -> Result<SymSample<F>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let signs: Vec<bool> = (0..sample2.len()).map(|_| rng.next_u32() & 1 == 1).collect();
    let mut sym = symmetrize_with(sample2, &signs)?;
    sym.source_seed = seed;
    Ok(sym)
}

/// Reflection with explicit flips: `true` keeps the observation.
pub fn symmetrize_with<F: Scalar>(sample2: &[F], keep: &[bool]) -> Result<SymSample<F>> {
    assert_eq!(sample2.len(), keep.len(), "one flip per observation");
    let two = F::lit(2.0);
    let y = sample2
        .iter()
        .zip(keep)
        .map(|(&x, &k)| {
            if !(x >= F::zero() && x <= F::one()) {
                Err(Error::out_of_domain("observation", x.as_f64(), "[0, 1]"))
            } else if k {
                Ok(x)
            } else {
                Ok(two - x)
            }
        })
        .collect::<Result<Vec<F>>>()?;
    Ok(SymSample { y, source_seed: 0 })
}

/// `n^-1 sum L_b(x - Y_k)` by direct summation, any `b > 0`.
pub fn kde_sym<F: Scalar>(sym: &SymSample<F>, kernel: &Kernel<F>, b: F, x: F) -> Result<F> {
    check_sym_args(sym, kernel, b)?;
    let sum: F = sym.y.iter().map(|&y| kernel.eval((x - y) / b)).sum();
    Ok(sum / (b * F::from_count(sym.len())))
}

/// `delta^-1 \int_{1-delta}^{1+delta} g^sym_b`, trapezoid rule with `nodes` nodes.
pub fn theta_raw<F: Scalar>(
    sym: &SymSample<F>,
    kernel: &Kernel<F>,
    b: F,
    delta: F,
    nodes: usize,
) -> Result<F> {
    check_delta(delta)?;
    check_sym_args(sym, kernel, b)?;
    let one = F::one();
    let integral = quad::trapezoid(one - delta, one + delta, nodes, |x| {
        kde_sym(sym, kernel, b, x).expect("arguments checked above")
    });
    Ok(integral / delta)
}

/// Clamp to `[delta/2, 1 - delta/2]`.
pub fn truncate_theta<F: Scalar>(raw: F, delta: F) -> Result<F> {
    check_delta(delta)?;
    let half = delta / F::lit(2.0);
    Ok(raw.min(F::one() - half).max(half))
}

/// `#{X_i > tau} / (n (1 - tau))`.
pub fn storey_theta<F: Scalar>(sample2: &[F], tau: F) -> Result<F> {
    if !(tau > F::zero() && tau < F::one()) {
        return Err(Error::out_of_domain("tau", tau.as_f64(), "(0, 1)"));
    }
    if sample2.is_empty() {
        return Err(Error::EmptySample("auxiliary"));
    }
    let above = sample2.iter().filter(|&&x| x > tau).count();
    Ok(F::from_count(above) / (F::from_count(sample2.len()) * (F::one() - tau)))
}

fn check_delta<F: Scalar>(delta: F) -> Result<()> {
    if delta > F::zero() && delta < F::one() {
        Ok(())
    } else {
        Err(Error::out_of_domain("delta", delta.as_f64(), "(0, 1)"))
    }
}

fn check_sym_args<F: Scalar>(sym: &SymSample<F>, kernel: &Kernel<F>, b: F) -> Result<()> {
    if !kernel.is_symmetric() {
        return Err(Error::Kernel("reflection needs a symmetric kernel".into()));
    }
    if sym.is_empty() {
        return Err(Error::EmptySample("reflected"));
    }
    check_bandwidth(b)
}

/// Reflected-sample estimator over a bandwidth grid: the selection rule
/// under sup-norm loss on `[1 - delta, 1 + delta]` and the resulting
/// truncated proportion.
#[derive(Debug, Clone)]
pub struct SymEstimator<F> {
    smoother: Smoother<F>,
    delta: F,
    penalty: Vec<F>,
    sup_grid: Vec<F>,
}

impl<F: Scalar> SymEstimator<F> {
    /// `lambda` scales `Gamma_2(b) = lambda ||L||_inf log(n) / (n b)`; the sup
    /// is taken over `sup_points` evenly spaced points.
    pub fn new(
        sym: &SymSample<F>,
        bank: Arc<KernelBank<F>>,
        delta: F,
        lambda: F,
        sup_points: usize,
    ) -> Result<Self> {
        check_delta(delta)?;
        if !(lambda > F::zero()) {
            return Err(Error::param("lambda", lambda.as_f64(), "must be positive"));
        }
        if !bank.kernel().is_symmetric() {
            return Err(Error::Kernel("reflection needs a symmetric kernel".into()));
        }
        if sym.is_empty() {
            return Err(Error::EmptySample("reflected"));
        }
        let n = F::from_count(sym.len());
        let base = lambda * bank.kernel().norms().sup * n.ln() / n;
        let penalty = bank.grid().values().iter().map(|&b| base / b).collect();
        let one = F::one();
        Ok(SymEstimator {
            smoother: Smoother::new(bank, &sym.y),
            delta,
            penalty,
            sup_grid: quad::linspace(one - delta, one + delta, sup_points),
        })
    }

    pub fn smoother(&self) -> &Smoother<F> {
        &self.smoother
    }

    pub fn delta(&self) -> F {
        self.delta
    }

    /// `Gamma_2` per grid bandwidth.
    pub fn penalty(&self) -> &[F] {
        &self.penalty
    }

    pub fn sup_grid(&self) -> &[F] {
        &self.sup_grid
    }

    /// Squared sup discrepancies `sup_x (g_{b,b'}(x) - g_{b'}(x))^2`, row-major.
    pub fn discrepancies(&self) -> Vec<F> {
        let m = self.smoother.bank().grid().len();
        let mut d = vec![F::zero(); m * m];
        for &x in &self.sup_grid {
            let singles = self.smoother.singles(x);
            let pairs = self.smoother.pairs(x);
            for i in 0..m {
                for j in 0..m {
                    let diff = pairs[i * m + j] - singles[j];
                    let sq = diff * diff;
                    if sq > d[i * m + j] {
                        d[i * m + j] = sq;
                    }
                }
            }
        }
        d
    }

    /// `argmin_b {Delta(b) + Gamma_2(b)}`.
    pub fn select(&self) -> Selection<F> {
        let d = self.discrepancies();
        let m = self.penalty.len();
        bandwidth::select(self.smoother.bank().grid(), &self.penalty, |i, j| d[i * m + j])
    }

    /// Interval average for the `i`-th grid bandwidth.
    pub fn theta_raw(&self, i: usize, nodes: usize) -> F {
        let one = F::one();
        quad::trapezoid(one - self.delta, one + self.delta, nodes, |x| {
            self.smoother.single(i, x)
        }) / self.delta
    }

    /// Full pipeline: select, average, truncate.
    pub fn estimate(&self, nodes: usize) -> ThetaEstimate<F> {
        let sel = self.select();
        let raw = self.theta_raw(sel.index, nodes);
        let tilde = truncate_theta(raw, self.delta).expect("delta checked at construction");
        ThetaEstimate {
            theta_raw: raw,
            theta_tilde: tilde,
            b_selected: self.smoother.bank().grid().values()[sel.index],
            truncated: tilde != raw,
        }
    }
}

/// Selected bandwidth for the reflected estimator; see [`SymEstimator`].
pub fn lepski_select_b<F: Scalar>(
    sym: &SymSample<F>,
    bank: Arc<KernelBank<F>>,
    delta: F,
    lambda: F,
    sup_points: usize,
) -> Result<F> {
    let est = SymEstimator::new(sym, bank.clone(), delta, lambda, sup_points)?;
    Ok(bank.grid().values()[est.select().index])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bandwidth::BandwidthGrid;
    use crate::mixture::MixtureModel;

    fn tri() -> Kernel<f64> {
        Kernel::triangular()
    }

    #[test]
    fn forced_flips() {
        let keep = symmetrize_with(&[0.3], &[true]).unwrap();
        assert_eq!(keep.y, vec![0.3]);
        let flip = symmetrize_with(&[0.3], &[false]).unwrap();
        assert_eq!(flip.y, vec![1.7]);
        assert!(symmetrize_with(&[1.3], &[true]).is_err());
    }

    #[test]
    fn symmetrize_is_deterministic_and_faithful() {
        let x = MixtureModel::<f64>::f2().sample(1000, 1);
        let a = symmetrize(&x, 5).unwrap();
        assert_eq!(a, symmetrize(&x, 5).unwrap());
        assert_eq!(a.source_seed, 5);
        for (&xi, &yi) in x.iter().zip(&a.y) {
            assert!(yi == xi || yi == 2.0 - xi);
            assert!((0.0..=2.0).contains(&yi));
        }
        let flipped = a.y.iter().filter(|&&y| y > 1.0).count();
        assert!((400..600).contains(&flipped));
    }

    #[test]
    fn kde_sym_values() {
        let s = SymSample { y: vec![1.0], source_seed: 0 };
        assert!((kde_sym(&s, &tri(), 0.5, 1.0).unwrap() - 2.0).abs() < 1e-15);
        let s = SymSample { y: vec![0.1, 1.9], source_seed: 0 };
        assert_eq!(kde_sym(&s, &tri(), 0.05, 1.0).unwrap(), 0.0);
        assert!(kde_sym(&s, &tri(), 0.0, 1.0).is_err());
    }

    #[test]
    fn kde_sym_mirror_symmetry() {
        let half = MixtureModel::<f64>::f3().sample(300, 2);
        let mut y = half.clone();
        y.extend(half.iter().map(|&x| 2.0 - x));
        let s = SymSample { y, source_seed: 0 };
        for &t in &[0.0, 0.05, 0.2, 0.6] {
            let a = kde_sym(&s, &tri(), 0.1, 1.0 + t).unwrap();
            let b = kde_sym(&s, &tri(), 0.1, 1.0 - t).unwrap();
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn theta_raw_of_constant_is_twice() {
        // Uniform on [0, 2] reflected from a uniform sample: with b small
        // and a dense regular design the estimate is 1/2 away from edges.
        let n = 20_000;
        let y: Vec<f64> = (0..n).map(|i| (i as f64 + 0.5) * 2.0 / n as f64).collect();
        let s = SymSample { y, source_seed: 0 };
        let v = theta_raw(&s, &tri(), 0.05, 0.3, 256).unwrap();
        assert!((v - 1.0).abs() < 1e-6, "{v}");
        assert!(theta_raw(&s, &tri(), 0.05, 1.0, 256).is_err());
    }

    #[test]
    fn truncation() {
        assert_eq!(truncate_theta(0.45, 0.3).unwrap(), 0.45);
        assert!((truncate_theta(0.02f64, 0.3).unwrap() - 0.15).abs() < 1e-15);
        assert!((truncate_theta(0.99f64, 0.3).unwrap() - 0.85).abs() < 1e-15);
        assert!(truncate_theta(0.5, 0.0).is_err());
    }

    #[test]
    fn storey_counts() {
        let s = [0.9, 0.95, 0.2, 0.3];
        assert_eq!(storey_theta(&s, 0.5).unwrap(), 1.0);
        assert_eq!(storey_theta(&[0.1, 0.2], 0.5).unwrap(), 0.0);
        assert!(storey_theta(&s, 1.0).is_err());
        assert!(storey_theta::<f64>(&[], 0.5).is_err());
    }

    #[test]
    fn grid_estimator_agrees_with_direct_summation() {
        let x = MixtureModel::<f64>::f3().sample(1000, 3);
        let sym = symmetrize(&x, 9).unwrap();
        let grid = BandwidthGrid::reciprocal(1000).unwrap();
        let bank = KernelBank::new(tri(), grid.clone()).unwrap();
        let est = SymEstimator::new(&sym, bank, 0.1, 4.25, 128).unwrap();
        for (i, &b) in grid.values().iter().enumerate().step_by(7) {
            let fast = est.theta_raw(i, 256);
            let slow = theta_raw(&sym, &tri(), b, 0.1, 256).unwrap();
            assert!((fast - slow).abs() < 1e-10);
        }
    }

    #[test]
    fn selection_edge_cases() {
        let x = MixtureModel::<f64>::f2().sample(800, 3);
        let sym = symmetrize(&x, 1).unwrap();
        let single = KernelBank::new(tri(), BandwidthGrid::from_ks([6]).unwrap()).unwrap();
        assert_eq!(lepski_select_b(&sym, single, 0.3, 4.25, 128).unwrap(), 1.0 / 6.0);
        let full = KernelBank::new(tri(), BandwidthGrid::reciprocal(800).unwrap()).unwrap();
        assert_eq!(lepski_select_b(&sym, full, 0.3, 1e12, 128).unwrap(), 1.0);
    }
}
