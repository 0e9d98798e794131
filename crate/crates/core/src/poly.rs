//! Piecewise polynomials with compact support and their exact convolution.
//!
//! Every kernel the crate supports is piecewise polynomial, so scaled
//! kernels and pairwise convolutions `K_h * K_h'` can be carried around in
//! closed form instead of being re-integrated at every evaluation.

use crate::Scalar;

/// Dense polynomial, coefficients in ascending powers.
#[derive(Debug, Clone, PartialEq)]
pub struct Poly<F> {
    coef: Vec<F>,
}

impl<F: Scalar> Poly<F> {
    pub fn new(coef: Vec<F>) -> Self {
        let mut p = Poly { coef };
        p.trim();
        p
    }

    pub fn zero() -> Self {
        Poly { coef: Vec::new() }
    }

    pub fn constant(c: F) -> Self {
        Poly::new(vec![c])
    }

    /// `a + b t`
    pub fn linear(a: F, b: F) -> Self {
        Poly::new(vec![a, b])
    }

    pub fn coef(&self) -> &[F] {
        &self.coef
    }

    /// Degree, with the zero polynomial reported as degree 0.
    pub fn degree(&self) -> usize {
        self.coef.len().saturating_sub(1)
    }

    pub fn eval(&self, t: F) -> F {
        self.coef.iter().rev().fold(F::zero(), |acc, &c| acc * t + c)
    }

    pub fn add(&self, other: &Self) -> Self {
        let len = self.coef.len().max(other.coef.len());
        let coef = (0..len)
            .map(|i| {
                self.coef.get(i).copied().unwrap_or_else(F::zero)
                    + other.coef.get(i).copied().unwrap_or_else(F::zero)
            })
            .collect();
        Poly::new(coef)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(-F::one()))
    }

    pub fn scale(&self, s: F) -> Self {
        Poly::new(self.coef.iter().map(|&c| c * s).collect())
    }

    pub fn mul(&self, other: &Self) -> Self {
        if self.coef.is_empty() || other.coef.is_empty() {
            return Poly::zero();
        }
        let mut coef = vec![F::zero(); self.coef.len() + other.coef.len() - 1];
        for (i, &a) in self.coef.iter().enumerate() {
            for (j, &b) in other.coef.iter().enumerate() {
                coef[i + j] = coef[i + j] + a * b;
            }
        }
        Poly::new(coef)
    }

    pub fn pow(&self, k: usize) -> Self {
        (0..k).fold(Poly::constant(F::one()), |acc, _| acc.mul(self))
    }

    /// `p(s t)`: rescales the argument.
    pub fn stretch(&self, s: F) -> Self {
        let mut f = F::one();
        Poly::new(
            self.coef
                .iter()
                .map(|&c| {
                    let v = c * f;
                    f = f * s;
                    v
                })
                .collect(),
        )
    }

    fn trim(&mut self) {
        while matches!(self.coef.last(), Some(c) if c.is_zero()) {
            self.coef.pop();
        }
    }
}

/// One polynomial piece, active on `(lo, hi]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Piece<F> {
    pub lo: F,
    pub hi: F,
    pub poly: Poly<F>,
}

/// Piecewise polynomial function, zero outside the union of its pieces.
///
/// Pieces are sorted by `lo` and do not overlap.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewisePoly<F> {
    pieces: Vec<Piece<F>>,
}

impl<F: Scalar> PiecewisePoly<F> {
    pub fn new(mut pieces: Vec<Piece<F>>) -> Self {
        pieces.retain(|p| p.hi > p.lo);
        pieces.sort_by(|a, b| a.lo.partial_cmp(&b.lo).expect("NaN breakpoint"));
        PiecewisePoly { pieces }
    }

    pub fn pieces(&self) -> &[Piece<F>] {
        &self.pieces
    }

    pub fn support(&self) -> (F, F) {
        match (self.pieces.first(), self.pieces.last()) {
            (Some(a), Some(b)) => (a.lo, b.hi),
            _ => (F::zero(), F::zero()),
        }
    }

    pub fn max_degree(&self) -> usize {
        self.pieces
            .iter()
            .map(|p| p.poly.degree())
            .max()
            .unwrap_or(0)
    }

    pub fn eval(&self, t: F) -> F {
        // Pieces are (lo, hi]; the very first piece also owns its left end
        // so evaluation at the support boundary of a continuous kernel is exact.
        for (i, p) in self.pieces.iter().enumerate() {
            if (t > p.lo || (i == 0 && t == p.lo)) && t <= p.hi {
                return p.poly.eval(t);
            }
        }
        F::zero()
    }

    /// `K(t / h) / h`.
    pub fn dilate(&self, h: F) -> Self {
        let inv = F::one() / h;
        PiecewisePoly::new(
            self.pieces
                .iter()
                .map(|p| Piece {
                    lo: p.lo * h,
                    hi: p.hi * h,
                    poly: p.poly.stretch(inv).scale(inv),
                })
                .collect(),
        )
    }

    /// Exact integral over the whole real line.
    pub fn integral(&self) -> F {
        self.pieces
            .iter()
            .map(|p| {
                let anti = antiderivative(&p.poly);
                anti.eval(p.hi) - anti.eval(p.lo)
            })
            .sum()
    }

    /// Exact convolution `(self * other)(t) = \int self(s) other(t - s) ds`.
    pub fn convolve(&self, other: &Self) -> Self {
        let mut breaks: Vec<F> = Vec::new();
        for p in &self.pieces {
            for q in &other.pieces {
                breaks.extend([p.lo + q.lo, p.lo + q.hi, p.hi + q.lo, p.hi + q.hi]);
            }
        }
        breaks.sort_by(|a, b| a.partial_cmp(b).expect("NaN breakpoint"));
        breaks.dedup();

        // The antiderivative in s of p(s) q(t - s) as a polynomial in s whose
        // coefficients are polynomials in t.
        let kernels: Vec<(&Piece<F>, &Piece<F>, Vec<Poly<F>>)> = self
            .pieces
            .iter()
            .flat_map(|p| {
                other
                    .pieces
                    .iter()
                    .map(move |q| (p, q, product_antiderivative(&p.poly, &q.poly)))
            })
            .collect();

        let two = F::lit(2.0);
        let mut out = Vec::with_capacity(breaks.len());
        for w in breaks.windows(2) {
            let (lo, hi) = (w[0], w[1]);
            let mid = (lo + hi) / two;
            let mut acc = Poly::zero();
            for (p, q, anti) in &kernels {
                if mid <= p.lo + q.lo || mid >= p.hi + q.hi {
                    continue;
                }
                // s ranges over [max(p.lo, t - q.hi), min(p.hi, t - q.lo)].
                let lower = if mid < p.lo + q.hi {
                    Poly::constant(p.lo)
                } else {
                    Poly::linear(-q.hi, F::one())
                };
                let upper = if mid > p.hi + q.lo {
                    Poly::constant(p.hi)
                } else {
                    Poly::linear(-q.lo, F::one())
                };
                acc = acc.add(&substitute(anti, &upper).sub(&substitute(anti, &lower)));
            }
            out.push(Piece { lo, hi, poly: acc });
        }
        PiecewisePoly::new(out)
    }
}

fn antiderivative<F: Scalar>(p: &Poly<F>) -> Poly<F> {
    let mut coef = vec![F::zero()];
    coef.extend(
        p.coef()
            .iter()
            .enumerate()
            .map(|(i, &c)| c / F::from_count(i + 1)),
    );
    Poly::new(coef)
}

/// Coefficients `c_k(t)` with `\int p(s) q(t - s) ds = sum_k c_k(t) s^k`.
fn product_antiderivative<F: Scalar>(p: &Poly<F>, q: &Poly<F>) -> Vec<Poly<F>> {
    let deg = p.coef().len() + q.coef().len();
    let mut out = vec![Poly::zero(); deg + 1];
    for (i, &pi) in p.coef().iter().enumerate() {
        for (j, &qj) in q.coef().iter().enumerate() {
            // (t - s)^j = sum_m C(j, m) t^(j - m) (-s)^m
            for m in 0..=j {
                let sign = if m % 2 == 0 { F::one() } else { -F::one() };
                let c = pi * qj * F::from_count(binomial(j, m)) * sign
                    / F::from_count(i + m + 1);
                let mut tpow = vec![F::zero(); j - m + 1];
                tpow[j - m] = c;
                out[i + m + 1] = out[i + m + 1].add(&Poly::new(tpow));
            }
        }
    }
    out
}

/// Evaluates `sum_k c_k(t) s(t)^k` as a polynomial in `t`.
fn substitute<F: Scalar>(coefs: &[Poly<F>], s: &Poly<F>) -> Poly<F> {
    let mut acc = Poly::zero();
    let mut spow = Poly::constant(F::one());
    for c in coefs {
        acc = acc.add(&c.mul(&spow));
        spow = spow.mul(s);
    }
    acc
}

pub(crate) fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
}
