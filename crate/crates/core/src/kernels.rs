//! Compactly supported kernels, their dilations `K_h(t) = K(t / h) / h`
//! and the pairwise convolutions `K_h * K_h'` used by the bandwidth
//! selectors.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::poly::{Piece, PiecewisePoly, Poly};
use crate::quad;
use crate::Scalar;

const CHECK_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum KernelShape {
    /// `(1 - |u|) 1{|u| <= 1}`
    #[default]
    Triangular,
    /// `1/2 1{|u| <= 1}`
    Rectangular,
    /// `3/4 (1 - u^2) 1{|u| <= 1}`
    Epanechnikov,
}

impl fmt::Display for KernelShape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            KernelShape::Triangular => "triangular",
            KernelShape::Rectangular => "rectangular",
            KernelShape::Epanechnikov => "epanechnikov",
        })
    }
}

impl FromStr for KernelShape {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "triangular" => Ok(KernelShape::Triangular),
            "rectangular" | "uniform" => Ok(KernelShape::Rectangular),
            "epanechnikov" => Ok(KernelShape::Epanechnikov),
            _ => Err(Error::Unknown {
                kind: "kernel",
                name: s.to_string(),
            }),
        }
    }
}

/// Norm constants entering the penalty terms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelNorms<F> {
    pub l1: F,
    pub l2sq: F,
    pub sup: F,
    pub radius: F,
}

/// A validated kernel with its norms cached.
///
/// Immutable once built; construction integrates the kernel numerically and
/// refuses it unless it has unit mass and the closed-form norms agree with
/// the quadrature.
#[derive(Debug, Clone)]
pub struct Kernel<F> {
    shape: KernelShape,
    norms: KernelNorms<F>,
    unit: PiecewisePoly<F>,
}

impl<F: Scalar> Kernel<F> {
    pub fn new(shape: KernelShape) -> Result<Self> {
        let one = F::one();
        let (unit, l1, l2sq, sup) = match shape {
            KernelShape::Triangular => (
                PiecewisePoly::new(vec![
                    Piece {
                        lo: -one,
                        hi: F::zero(),
                        poly: Poly::linear(one, one),
                    },
                    Piece {
                        lo: F::zero(),
                        hi: one,
                        poly: Poly::linear(one, -one),
                    },
                ]),
                1.0,
                2.0 / 3.0,
                1.0,
            ),
            KernelShape::Rectangular => (
                PiecewisePoly::new(vec![Piece {
                    lo: -one,
                    hi: one,
                    poly: Poly::constant(F::lit(0.5)),
                }]),
                1.0,
                0.5,
                0.5,
            ),
            KernelShape::Epanechnikov => (
                PiecewisePoly::new(vec![Piece {
                    lo: -one,
                    hi: one,
                    poly: Poly::new(vec![F::lit(0.75), F::zero(), F::lit(-0.75)]),
                }]),
                1.0,
                0.6,
                0.75,
            ),
        };
        let kernel = Kernel {
            shape,
            norms: KernelNorms {
                l1: F::lit(l1),
                l2sq: F::lit(l2sq),
                sup: F::lit(sup),
                radius: one,
            },
            unit,
        };
        kernel.check()?;
        Ok(kernel)
    }

    pub fn triangular() -> Self {
        Self::new(KernelShape::Triangular).expect("triangular kernel is valid")
    }

    fn check(&self) -> Result<()> {
        let a = self.norms.radius;
        let breaks = [-a, F::zero(), a];
        let tol = F::lit(1e-12);
        let k = |u: F| self.eval(u);
        let mass = quad::simpson_split(-a, a, &breaks, tol, &k);
        let l1 = quad::simpson_split(-a, a, &breaks, tol, &|u: F| self.eval(u).abs());
        let l2sq = quad::simpson_split(-a, a, &breaks, tol, &|u: F| self.eval(u).powi(2));
        let sup = quad::linspace(-a, a, 2001)
            .into_iter()
            .map(|u| self.eval(u).abs())
            .fold(F::zero(), F::max);
        let tol = F::lit(CHECK_TOL);
        let bad = |name: &str, got: F, want: F| {
            Error::Kernel(format!("{} {name}: quadrature {got} vs cached {want}", self.shape))
        };
        if (mass - F::one()).abs() > tol {
            return Err(bad("mass", mass, F::one()));
        }
        if (l1 - self.norms.l1).abs() > tol {
            return Err(bad("L1 norm", l1, self.norms.l1));
        }
        if (l2sq - self.norms.l2sq).abs() > tol {
            return Err(bad("squared L2 norm", l2sq, self.norms.l2sq));
        }
        if (sup - self.norms.sup).abs() > tol {
            return Err(bad("sup norm", sup, self.norms.sup));
        }
        Ok(())
    }

    pub fn shape(&self) -> KernelShape {
        self.shape
    }

    pub fn norms(&self) -> KernelNorms<F> {
        self.norms
    }

    pub fn radius(&self) -> F {
        self.norms.radius
    }

    pub fn is_symmetric(&self) -> bool {
        // All supported shapes are even.
        true
    }

    /// `K(u)`; exactly zero outside `[-A, A]`.
    pub fn eval(&self, u: F) -> F {
        let a = u.abs();
        if a > self.norms.radius {
            return F::zero();
        }
        match self.shape {
            KernelShape::Triangular => F::one() - a,
            KernelShape::Rectangular => F::lit(0.5),
            KernelShape::Epanechnikov => F::lit(0.75) * (F::one() - a * a),
        }
    }

    /// `K_h(t) = K(t / h) / h`.
    pub fn scaled_eval(&self, h: F, t: F) -> Result<F> {
        check_bandwidth(h)?;
        Ok(self.eval(t / h) / h)
    }

    /// `K_h` as a piecewise polynomial.
    pub fn scaled(&self, h: F) -> Result<PiecewisePoly<F>> {
        check_bandwidth(h)?;
        Ok(self.unit.dilate(h))
    }

    /// `K_h * K_hp` in closed form.
    ///
    /// The two dilations are ordered before convolving so the result is
    /// bit-for-bit symmetric in `(h, hp)`.
    pub fn pair(&self, h: F, hp: F) -> Result<PiecewisePoly<F>> {
        check_bandwidth(h)?;
        check_bandwidth(hp)?;
        let (small, large) = if h <= hp { (h, hp) } else { (hp, h) };
        Ok(self.unit.dilate(small).convolve(&self.unit.dilate(large)))
    }

    /// `(K_h * K_hp)(t)`, exact up to rounding.
    pub fn scaled_pair_convolve(&self, h: F, hp: F, t: F) -> Result<F> {
        let a = self.norms.radius;
        if t.abs() > a * (h + hp) {
            check_bandwidth(h)?;
            check_bandwidth(hp)?;
            return Ok(F::zero());
        }
        Ok(self.pair(h, hp)?.eval(t))
    }

    /// `(K_h * K_hp)(t)` by the trapezoid rule over the support of the
    /// narrower factor with `nodes` nodes.
    ///
    /// Reference route, independent of the closed form in [`Kernel::pair`].
    pub fn scaled_pair_convolve_trapezoid(&self, h: F, hp: F, t: F, nodes: usize) -> Result<F> {
        check_bandwidth(h)?;
        check_bandwidth(hp)?;
        let (inner, outer) = if h <= hp { (h, hp) } else { (hp, h) };
        let a = self.norms.radius;
        if t.abs() > a * (h + hp) {
            return Ok(F::zero());
        }
        Ok(quad::trapezoid(-a * inner, a * inner, nodes, |s| {
            self.eval(s / inner) / inner * self.eval((t - s) / outer) / outer
        }))
    }
}

pub(crate) fn check_bandwidth<F: Scalar>(h: F) -> Result<()> {
    if h > F::zero() && h.is_finite() {
        Ok(())
    } else {
        Err(Error::NonPositiveBandwidth(h.as_f64()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn triangular_values() {
        let k = Kernel::<f64>::triangular();
        assert_eq!(k.eval(0.0), 1.0);
        assert_eq!(k.eval(0.5), 0.5);
        assert_eq!(k.eval(2.0), 0.0);
        assert_eq!(k.eval(-1.0), 0.0);
    }

    #[test]
    fn triangular_norms() {
        let n = Kernel::<f64>::triangular().norms();
        assert_eq!(n.l1, 1.0);
        assert!(close(n.l2sq, 2.0 / 3.0, 1e-15));
        assert_eq!(n.sup, 1.0);
        assert_eq!(n.radius, 1.0);
    }

    #[test]
    fn every_shape_passes_construction_checks() {
        for shape in [
            KernelShape::Triangular,
            KernelShape::Rectangular,
            KernelShape::Epanechnikov,
        ] {
            let k = Kernel::<f64>::new(shape).unwrap();
            assert!(close(k.scaled(0.3).unwrap().integral(), 1.0, 1e-12));
        }
        assert!(Kernel::<f32>::new(KernelShape::Triangular).is_ok());
    }

    #[test]
    fn scaled_values() {
        let k = Kernel::<f64>::triangular();
        assert_eq!(k.scaled_eval(0.5, 0.0).unwrap(), 2.0);
        assert_eq!(k.scaled_eval(0.5, 0.25).unwrap(), 1.0);
        assert_eq!(k.scaled_eval(0.5, 0.6).unwrap(), 0.0);
        assert!(matches!(
            k.scaled_eval(0.0, 0.1),
            Err(Error::NonPositiveBandwidth(_))
        ));
        assert!(k.scaled_eval(-1.0, 0.1).is_err());
    }

    #[test]
    fn pair_convolution_values() {
        let k = Kernel::<f64>::triangular();
        assert!(close(k.scaled_pair_convolve(1.0, 1.0, 0.0).unwrap(), 2.0 / 3.0, 1e-15));
        assert_eq!(k.scaled_pair_convolve(1.0, 1.0, 2.5).unwrap(), 0.0);
        assert!(k.scaled_pair_convolve(0.0, 1.0, 0.0).is_err());
        assert!(k.scaled_pair_convolve(1.0, -0.1, 0.0).is_err());
    }

    #[test]
    fn pair_convolution_matches_fine_trapezoid() {
        // Oracle: trapezoid at ten times the reference resolution.
        let k = Kernel::<f64>::triangular();
        let exact = k.scaled_pair_convolve(0.25, 0.5, 0.1).unwrap();
        let oracle = k.scaled_pair_convolve_trapezoid(0.25, 0.5, 0.1, 10_240).unwrap();
        assert!(close(exact, oracle, 1e-6), "{exact} vs {oracle}");
        let coarse = k.scaled_pair_convolve_trapezoid(0.25, 0.5, 0.1, 1024).unwrap();
        assert!(close(exact, coarse, 1e-6));
    }

    #[test]
    fn pair_convolution_mass_and_parity() {
        for shape in [
            KernelShape::Triangular,
            KernelShape::Rectangular,
            KernelShape::Epanechnikov,
        ] {
            let k = Kernel::<f64>::new(shape).unwrap();
            let (h, hp) = (0.1, 1.0 / 7.0);
            let pp = k.pair(h, hp).unwrap();
            let s = h + hp;
            let mass = quad::trapezoid(-s, s, 20_001, |t| pp.eval(t));
            assert!(close(mass, 1.0, 1e-5), "{shape}: {mass}");
            for &t in &[0.0, 0.03, 0.11, 0.2, 0.24] {
                let a = k.scaled_pair_convolve(h, hp, t).unwrap();
                let b = k.scaled_pair_convolve(hp, h, t).unwrap();
                let c = k.scaled_pair_convolve(h, hp, -t).unwrap();
                assert_eq!(a, b);
                assert!(close(a, c, 1e-9));
            }
        }
    }

    #[test]
    fn shape_parsing() {
        assert_eq!("Triangular".parse::<KernelShape>().unwrap(), KernelShape::Triangular);
        assert!("gaussian".parse::<KernelShape>().is_err());
        assert_eq!(KernelShape::Epanechnikov.to_string(), "epanechnikov");
    }
}
