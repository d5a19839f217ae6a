//! Normal-form arithmetic in the Weyl algebra A₁ = ℚ⟨x, y⟩ / (yx − xy − 1).
//!
//! Elements are sparse maps from exponent pairs `(i, j)` to coefficients,
//! read as Σ c·x^i·y^j with every x to the left. The x-exponent is signed:
//! the evaluation code works in the localization A₁[x⁻¹], where the same
//! reordering formula holds with falling factorials of negative exponents.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_traits::{One, Zero};

use crate::rat::Rat;

#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct WeylElement {
    terms: BTreeMap<(i64, u32), Rat>,
}

/// A formal quotient num·den⁻¹, only used for value and residue queries.
#[derive(Clone, Debug, PartialEq)]
pub struct WeylFraction {
    pub num: WeylElement,
    pub den: WeylElement,
}

/// Generators and scalars of a product word.
#[derive(Clone, Debug, PartialEq)]
pub enum Letter {
    X,
    Y,
    Scalar(Rat),
}

impl WeylElement {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn one() -> Self {
        Self::constant(Rat::one())
    }

    pub fn constant(c: Rat) -> Self {
        Self::monomial(c, 0, 0)
    }

    pub fn x() -> Self {
        Self::monomial(Rat::one(), 1, 0)
    }

    pub fn y() -> Self {
        Self::monomial(Rat::one(), 0, 1)
    }

    pub fn monomial(c: Rat, i: i64, j: u32) -> Self {
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert((i, j), c);
        }
        WeylElement { terms }
    }

    pub fn from_terms(it: impl IntoIterator<Item = ((i64, u32), Rat)>) -> Self {
        let mut e = WeylElement::zero();
        for (k, c) in it {
            e.add_term(k, c);
        }
        e
    }

    pub fn add_term(&mut self, key: (i64, u32), c: Rat) {
        if c.is_zero() {
            return;
        }
        match self.terms.get_mut(&key) {
            Some(v) => {
                *v += c;
                if v.is_zero() {
                    self.terms.remove(&key);
                }
            }
            None => {
                self.terms.insert(key, c);
            }
        }
    }

    pub fn terms(&self) -> std::collections::btree_map::Iter<'_, (i64, u32), Rat> {
        self.terms.iter()
    }

    pub fn term_map(&self) -> &BTreeMap<(i64, u32), Rat> {
        &self.terms
    }

    pub fn coeff(&self, i: i64, j: u32) -> Rat {
        self.terms.get(&(i, j)).cloned().unwrap_or_default()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Degree in y, or None for zero.
    pub fn y_degree(&self) -> Option<u32> {
        self.terms.keys().map(|k| k.1).max()
    }

    pub fn x_degree(&self) -> Option<i64> {
        self.terms.keys().map(|k| k.0).max()
    }

    /// True when no negative power of x occurs.
    pub fn is_polynomial(&self) -> bool {
        self.terms.keys().all(|k| k.0 >= 0)
    }

    pub fn scale(&self, c: &Rat) -> Self {
        if c.is_zero() {
            return Self::zero();
        }
        WeylElement {
            terms: self.terms.iter().map(|(k, v)| (*k, v * c)).collect(),
        }
    }

    /// Multiply on the left by x^s.
    pub fn shift_x(&self, s: i64) -> Self {
        WeylElement {
            terms: self.terms.iter().map(|(k, v)| ((k.0 + s, k.1), v.clone())).collect(),
        }
    }

    /// Coefficient of y^d as a Laurent polynomial in x (map exponent → coeff).
    pub fn y_coefficient(&self, d: u32) -> BTreeMap<i64, Rat> {
        self.terms
            .iter()
            .filter(|(k, _)| k.1 == d)
            .map(|(k, v)| (k.0, v.clone()))
            .collect()
    }

    pub fn times(&self, other: &Self) -> Self {
        let mut acc: BTreeMap<(i64, u32), Rat> = BTreeMap::new();
        let mut cache: BTreeMap<(u32, i64), Vec<BigInt>> = BTreeMap::new();
        for (&(a1, b1), c1) in &self.terms {
            for (&(a2, b2), c2) in &other.terms {
                let coeffs = cache
                    .entry((b1, a2))
                    .or_insert_with(|| reorder_coefficients(b1, a2));
                let c = c1 * c2;
                for (t, k) in coeffs.iter().enumerate() {
                    if k.is_zero() {
                        continue;
                    }
                    let key = (a1 + a2 - t as i64, b1 + b2 - t as u32);
                    let term = &c * Rat::from(k.clone());
                    match acc.get_mut(&key) {
                        Some(v) => *v += term,
                        None => {
                            acc.insert(key, term);
                        }
                    }
                }
            }
        }
        acc.retain(|_, v| !v.is_zero());
        WeylElement { terms: acc }
    }

    pub fn pow(&self, n: u32) -> Self {
        let mut result = Self::one();
        let mut base = self.clone();
        let mut e = n;
        while e > 0 {
            if e & 1 == 1 {
                result = result.times(&base);
            }
            e >>= 1;
            if e > 0 {
                base = base.times(&base);
            }
        }
        result
    }

    /// ab − ba.
    pub fn commutator(&self, other: &Self) -> Self {
        &self.times(other) - &other.times(self)
    }

    /// Action on ℚ[t]: x ↦ multiplication by t, y ↦ d/dt.
    ///
    /// Requires nonnegative x-exponents. Polynomials are coefficient vectors
    /// indexed by degree.
    pub fn apply_to_poly(&self, p: &[Rat]) -> Vec<Rat> {
        let mut out: Vec<Rat> = Vec::new();
        for (&(i, j), c) in &self.terms {
            assert!(i >= 0, "apply_to_poly needs a polynomial element");
            let d = derivative(p, j);
            for (k, a) in d.iter().enumerate() {
                if a.is_zero() {
                    continue;
                }
                let idx = k + i as usize;
                if out.len() <= idx {
                    out.resize(idx + 1, Rat::zero());
                }
                out[idx] += c * a;
            }
        }
        while out.last().is_some_and(|c| c.is_zero()) {
            out.pop();
        }
        out
    }
}

fn derivative(p: &[Rat], times: u32) -> Vec<Rat> {
    let mut q = p.to_vec();
    for _ in 0..times {
        if q.is_empty() {
            break;
        }
        q = q
            .iter()
            .enumerate()
            .skip(1)
            .map(|(k, c)| c * Rat::from(k as i64))
            .collect();
    }
    q
}

/// Coefficients k_t in y^b x^c = Σ_t k_t x^{c−t} y^{b−t}, namely C(b,t)·c(c−1)⋯(c−t+1).
fn reorder_coefficients(b: u32, c: i64) -> Vec<BigInt> {
    let mut out = Vec::with_capacity(b as usize + 1);
    let mut binom = BigInt::one();
    let mut fall = BigInt::one();
    for t in 0..=b {
        if t > 0 {
            binom = binom * BigInt::from(b - t + 1) / BigInt::from(t);
            fall *= BigInt::from(c - t as i64 + 1);
        }
        out.push(&binom * &fall);
        if fall.is_zero() {
            break;
        }
    }
    out
}

/// Normal form of a product word.
pub fn normalize(word: &[Letter]) -> WeylElement {
    word.iter().fold(WeylElement::one(), |acc, l| {
        let f = match l {
            Letter::X => WeylElement::x(),
            Letter::Y => WeylElement::y(),
            Letter::Scalar(c) => WeylElement::constant(c.clone()),
        };
        acc.times(&f)
    })
}

impl WeylFraction {
    pub fn new(num: WeylElement, den: WeylElement) -> Self {
        assert!(!den.is_zero(), "fraction with zero denominator");
        WeylFraction { num, den }
    }

    pub fn from_element(e: WeylElement) -> Self {
        WeylFraction::new(e, WeylElement::one())
    }
}

impl Add for &WeylElement {
    type Output = WeylElement;
    fn add(self, o: &WeylElement) -> WeylElement {
        let mut r = self.clone();
        for (k, v) in &o.terms {
            r.add_term(*k, v.clone());
        }
        r
    }
}

impl Sub for &WeylElement {
    type Output = WeylElement;
    fn sub(self, o: &WeylElement) -> WeylElement {
        let mut r = self.clone();
        for (k, v) in &o.terms {
            r.add_term(*k, -v);
        }
        r
    }
}

impl Neg for &WeylElement {
    type Output = WeylElement;
    fn neg(self) -> WeylElement {
        self.scale(&-Rat::one())
    }
}

impl Mul for &WeylElement {
    type Output = WeylElement;
    fn mul(self, o: &WeylElement) -> WeylElement {
        WeylElement::times(self, o)
    }
}

impl Add for WeylElement {
    type Output = WeylElement;
    fn add(self, o: WeylElement) -> WeylElement {
        &self + &o
    }
}

impl Sub for WeylElement {
    type Output = WeylElement;
    fn sub(self, o: WeylElement) -> WeylElement {
        &self - &o
    }
}

impl Mul for WeylElement {
    type Output = WeylElement;
    fn mul(self, o: WeylElement) -> WeylElement {
        WeylElement::times(&self, &o)
    }
}

impl fmt::Debug for WeylElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", crate::parse::print(self))
    }
}

impl fmt::Display for WeylElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", crate::parse::print(self))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn m(c: i64, i: i64, j: u32) -> WeylElement {
        WeylElement::monomial(Rat::from(c), i, j)
    }

    #[test]
    fn rewrite_examples() {
        let x = WeylElement::x();
        let y = WeylElement::y();
        assert_eq!(&y * &x, &m(1, 1, 1) + &m(1, 0, 0));
        assert_eq!(&x * &y, m(1, 1, 1));
        assert_eq!(normalize(&[Letter::Y, Letter::Y, Letter::X]), &m(1, 1, 2) + &m(2, 0, 1));
        assert_eq!(y.commutator(&x), WeylElement::one());
        let w1 = &m(1, 1, 2) - &m(1, 0, 0);
        assert!(w1.commutator(&w1).is_zero());
        assert_eq!(w1.commutator(&x), m(2, 1, 1));
        let sq = &w1 * &w1;
        let expected = WeylElement::from_terms([
            ((2, 4), Rat::from(1)),
            ((1, 3), Rat::from(2)),
            ((1, 2), Rat::from(-2)),
            ((0, 0), Rat::from(1)),
        ]);
        assert_eq!(sq, expected);
    }

    #[test]
    fn laurent_reordering() {
        // y·x⁻¹ = x⁻¹y − x⁻²
        let xi = m(1, -1, 0);
        let y = WeylElement::y();
        assert_eq!(&y * &xi, &m(1, -1, 1) - &m(1, -2, 0));
        // x·x⁻¹ = 1 and x⁻¹ commutes with y up to the rule above
        assert_eq!(&WeylElement::x() * &xi, WeylElement::one());
        let a = &(&y * &y) + &m(3, -2, 1);
        let b = &m(2, -3, 2) - &m(1, 1, 0);
        let c = &m(1, -1, 3) + &y;
        assert_eq!((&a * &b) * c.clone(), &a * &(&b * &c));
    }

    #[test]
    fn operator_action() {
        let t3 = vec![Rat::zero(), Rat::zero(), Rat::zero(), Rat::one()];
        assert_eq!(WeylElement::y().apply_to_poly(&t3), vec![Rat::zero(), Rat::zero(), Rat::from(3)]);
        let t2 = vec![Rat::zero(), Rat::zero(), Rat::one()];
        assert_eq!(m(1, 1, 1).apply_to_poly(&t2), vec![Rat::zero(), Rat::zero(), Rat::from(2)]);
    }

    fn arb_elem(deg: i64) -> impl Strategy<Value = WeylElement> {
        proptest::collection::vec((0..=deg, 0..=deg as u32, -5i64..6), 0..6).prop_map(|ts| {
            WeylElement::from_terms(ts.into_iter().map(|(i, j, c)| ((i, j), Rat::from(c))))
        })
    }

    fn arb_poly() -> impl Strategy<Value = Vec<Rat>> {
        proptest::collection::vec(-6i64..7, 0..13).prop_map(|v| v.into_iter().map(Rat::from).collect())
    }

    proptest! {
        #[test]
        fn representation_is_a_homomorphism(a in arb_elem(4), b in arb_elem(4), p in arb_poly()) {
            prop_assert_eq!((&a * &b).apply_to_poly(&p), a.apply_to_poly(&b.apply_to_poly(&p)));
        }

        #[test]
        fn ring_laws(a in arb_elem(3), b in arb_elem(3), c in arb_elem(3)) {
            prop_assert_eq!((&a * &b) * c.clone(), &a * &(&b * &c));
            prop_assert_eq!(&a * &(&b + &c), &(&a * &b) + &(&a * &c));
            prop_assert_eq!(&(&a + &b) * &c, &(&a * &c) + &(&b * &c));
        }

        #[test]
        fn commutator_laws(a in arb_elem(3), b in arb_elem(3), c in arb_elem(3)) {
            prop_assert_eq!(a.commutator(&b), -&b.commutator(&a));
            prop_assert_eq!(a.commutator(&(&b + &c)), &a.commutator(&b) + &a.commutator(&c));
            let yx = WeylElement::y().commutator(&WeylElement::x());
            let p = vec![Rat::from(3), Rat::from(-1), Rat::from(2)];
            prop_assert_eq!(yx.apply_to_poly(&p), p);
        }
    }
}
