//! Truncated Puiseux series in x^{-1} and the Ore ring R[y; d/dx].
//!
//! A series Σ c_q x^{−q} is stored by exponent q, so its value is the smallest
//! key. `known_up_to` bounds the precision: every term with exponent below it
//! is present, nothing is known at or beyond it. Arithmetic propagates the
//! weakest bound and a coefficient whose leading term is lost reports
//! [`Error::TruncationLoss`].

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::rat::Rat;
use crate::value::Value;
use crate::weyl::WeylElement;

#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct PuiseuxSeries {
    terms: BTreeMap<Rat, Rat>,
    known_up_to: Option<Rat>,
}

fn min_bound(a: Option<Rat>, b: Option<Rat>) -> Option<Rat> {
    match (a, b) {
        (Some(a), Some(b)) => Some(a.min(b)),
        (a, None) => a,
        (None, b) => b,
    }
}

impl PuiseuxSeries {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn one() -> Self {
        Self::constant(Rat::one())
    }

    pub fn constant(c: Rat) -> Self {
        Self::monomial(c, Rat::zero())
    }

    /// c·x^{−q}.
    pub fn monomial(c: Rat, q: Rat) -> Self {
        let mut s = Self::zero();
        s.add_term(q, c);
        s
    }

    /// x^i.
    pub fn x_pow(i: i64) -> Self {
        Self::monomial(Rat::one(), Rat::from(-i))
    }

    pub fn from_terms(it: impl IntoIterator<Item = (Rat, Rat)>) -> Self {
        let mut s = Self::zero();
        for (q, c) in it {
            s.add_term(q, c);
        }
        s
    }

    /// Restrict to exponents below `bound`.
    pub fn with_bound(mut self, bound: Rat) -> Self {
        self.terms.retain(|q, _| *q < bound);
        self.known_up_to = min_bound(self.known_up_to, Some(bound));
        self
    }

    pub fn add_term(&mut self, q: Rat, c: Rat) {
        if self.known_up_to.as_ref().is_some_and(|b| q >= *b) || c.is_zero() {
            return;
        }
        let e = self.terms.entry(q.clone()).or_insert_with(Rat::zero);
        *e += c;
        if e.is_zero() {
            self.terms.remove(&q);
        }
    }

    pub fn terms(&self) -> &BTreeMap<Rat, Rat> {
        &self.terms
    }

    pub fn known_up_to(&self) -> Option<&Rat> {
        self.known_up_to.as_ref()
    }

    pub fn is_exact(&self) -> bool {
        self.known_up_to.is_none()
    }

    /// Exactly zero.
    pub fn is_zero(&self) -> bool {
        self.terms.is_empty() && self.is_exact()
    }

    /// No term is known, though the series may be nonzero beyond the bound.
    pub fn is_unknown(&self) -> bool {
        self.terms.is_empty() && !self.is_exact()
    }

    pub fn leading(&self) -> Option<(&Rat, &Rat)> {
        self.terms.iter().next()
    }

    pub fn value(&self) -> Result<Value> {
        match self.leading() {
            Some((q, _)) => Ok(Value::rational(q.clone())),
            None if self.is_exact() => Ok(Value::Infinity),
            None => Err(Error::TruncationLoss(format!(
                "no term known below x^(-{})",
                self.known_up_to.as_ref().expect("bounded")
            ))),
        }
    }

    pub fn scale(&self, c: &Rat) -> Self {
        if c.is_zero() {
            return PuiseuxSeries { terms: BTreeMap::new(), known_up_to: self.known_up_to.clone() };
        }
        PuiseuxSeries {
            terms: self.terms.iter().map(|(q, d)| (q.clone(), d * c)).collect(),
            known_up_to: self.known_up_to.clone(),
        }
    }

    /// Multiply by x^m.
    pub fn shift_x(&self, m: i64) -> Self {
        let d = Rat::from(m);
        PuiseuxSeries {
            terms: self.terms.iter().map(|(q, c)| (q - &d, c.clone())).collect(),
            known_up_to: self.known_up_to.as_ref().map(|b| b - &d),
        }
    }

    /// Multiply by x^{−q} for rational q.
    pub fn shift_q(&self, q: &Rat) -> Self {
        PuiseuxSeries {
            terms: self.terms.iter().map(|(e, c)| (e + q, c.clone())).collect(),
            known_up_to: self.known_up_to.as_ref().map(|b| b + q),
        }
    }

    /// d/dx, termwise: x^{−q} ↦ −q·x^{−q−1}.
    pub fn delta(&self) -> Self {
        let one = Rat::one();
        let mut out = PuiseuxSeries {
            terms: BTreeMap::new(),
            known_up_to: self.known_up_to.as_ref().map(|b| b + &one),
        };
        for (q, c) in &self.terms {
            out.add_term(q + &one, -(q * c));
        }
        out
    }

    pub fn pow(&self, n: u32) -> Self {
        let mut acc = Self::one();
        for _ in 0..n {
            acc = &acc * self;
        }
        acc
    }
}

impl Add for &PuiseuxSeries {
    type Output = PuiseuxSeries;
    fn add(self, o: &PuiseuxSeries) -> PuiseuxSeries {
        let mut out = PuiseuxSeries {
            terms: self.terms.clone(),
            known_up_to: min_bound(self.known_up_to.clone(), o.known_up_to.clone()),
        };
        if let Some(b) = out.known_up_to.clone() {
            out.terms.retain(|q, _| *q < b);
        }
        for (q, c) in &o.terms {
            out.add_term(q.clone(), c.clone());
        }
        out
    }
}

impl Neg for &PuiseuxSeries {
    type Output = PuiseuxSeries;
    fn neg(self) -> PuiseuxSeries {
        self.scale(&Rat::from(-1))
    }
}

impl Sub for &PuiseuxSeries {
    type Output = PuiseuxSeries;
    fn sub(self, o: &PuiseuxSeries) -> PuiseuxSeries {
        self + &(-o)
    }
}

impl Mul for &PuiseuxSeries {
    type Output = PuiseuxSeries;
    fn mul(self, o: &PuiseuxSeries) -> PuiseuxSeries {
        let lead = |s: &PuiseuxSeries| s.leading().map(|(q, _)| q.clone());
        let bound_from = |a: &PuiseuxSeries, b: &PuiseuxSeries| -> Option<Rat> {
            let kb = b.known_up_to.clone()?;
            Some(match lead(a) {
                Some(v) => v + kb,
                None if a.is_exact() => return None,
                // neither factor has a known term: nothing can be said below the sum of bounds
                None => a.known_up_to.clone().expect("bounded") + kb,
            })
        };
        let bound = min_bound(bound_from(self, o), bound_from(o, self));
        let mut out = PuiseuxSeries { terms: BTreeMap::new(), known_up_to: bound };
        for (q1, c1) in &self.terms {
            for (q2, c2) in &o.terms {
                out.add_term(q1 + q2, c1 * c2);
            }
        }
        out
    }
}

impl Add for PuiseuxSeries {
    type Output = PuiseuxSeries;
    fn add(self, o: PuiseuxSeries) -> PuiseuxSeries {
        &self + &o
    }
}

impl Sub for PuiseuxSeries {
    type Output = PuiseuxSeries;
    fn sub(self, o: PuiseuxSeries) -> PuiseuxSeries {
        &self - &o
    }
}

impl Mul for PuiseuxSeries {
    type Output = PuiseuxSeries;
    fn mul(self, o: PuiseuxSeries) -> PuiseuxSeries {
        &self * &o
    }
}

fn fmt_exponent(q: &Rat) -> String {
    format!("x^({})", -q)
}

impl fmt::Display for PuiseuxSeries {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (q, c) in &self.terms {
            let (sign, mag) = if c.is_negative() { ("-", c.abs()) } else { ("+", c.clone()) };
            if first {
                if sign == "-" {
                    write!(f, "-")?;
                }
            } else {
                write!(f, " {sign} ")?;
            }
            if q.is_zero() {
                write!(f, "{mag}")?;
            } else {
                write!(f, "{mag}*{}", fmt_exponent(q))?;
            }
            first = false;
        }
        if let Some(b) = &self.known_up_to {
            if !first {
                write!(f, " + ")?;
            }
            write!(f, "O({})", fmt_exponent(b))?;
        } else if first {
            write!(f, "0")?;
        }
        Ok(())
    }
}

fn series_error(msg: impl Into<String>, column: usize) -> Error {
    Error::Parse { message: msg.into(), line: 1, column }
}

/// Exponent from "x^(e)", "x^e" or "x"; returns q = −e.
fn parse_x_power(s: &str, column: usize) -> Result<Rat> {
    let s = s.trim();
    if s == "x" {
        return Ok(Rat::from(-1));
    }
    let rest = s.strip_prefix("x^").ok_or_else(|| series_error(format!("expected x^(e), found '{s}'"), column))?;
    let inner = rest.strip_prefix('(').and_then(|r| r.strip_suffix(')')).unwrap_or(rest);
    let e: Rat = inner.trim().parse().map_err(|_| series_error(format!("bad exponent '{inner}'"), column))?;
    Ok(-e)
}

impl FromStr for PuiseuxSeries {
    type Err = Error;

    fn from_str(src: &str) -> Result<Self> {
        let mut pieces: Vec<(bool, String, usize)> = Vec::new();
        let mut depth = 0i32;
        let mut cur = String::new();
        let mut neg = false;
        let mut start = 1;
        for (idx, ch) in src.char_indices() {
            match ch {
                '(' => depth += 1,
                ')' => depth -= 1,
                _ => {}
            }
            let exponent_sign = cur.trim_end().ends_with('^');
            if depth == 0 && (ch == '+' || ch == '-') && !exponent_sign {
                if !cur.trim().is_empty() {
                    pieces.push((neg, std::mem::take(&mut cur), start));
                } else {
                    cur.clear();
                }
                neg = ch == '-';
                start = idx + 2;
                continue;
            }
            cur.push(ch);
        }
        if !cur.trim().is_empty() {
            pieces.push((neg, cur, start));
        }
        if depth != 0 {
            return Err(series_error("unbalanced parentheses", src.len()));
        }
        let mut out = PuiseuxSeries::zero();
        let mut bound = None;
        let mut raw = Vec::new();
        for (neg, piece, col) in pieces {
            let p = piece.trim();
            if let Some(inner) = p.strip_prefix("O(").and_then(|r| r.strip_suffix(')')) {
                bound = Some(parse_x_power(inner, col)?);
                continue;
            }
            let (c, q) = match p.split_once('*') {
                Some((c, x)) => {
                    let c: Rat = c.trim().parse().map_err(|_| series_error(format!("bad coefficient '{c}'"), col))?;
                    (c, parse_x_power(x, col)?)
                }
                None if p.starts_with('x') => (Rat::one(), parse_x_power(p, col)?),
                None => (p.parse().map_err(|_| series_error(format!("bad term '{p}'"), col))?, Rat::zero()),
            };
            raw.push((q, if neg { -c } else { c }));
        }
        for (q, c) in raw {
            out.add_term(q, c);
        }
        if let Some(b) = bound {
            if out.terms.keys().any(|q| *q >= b) {
                return Err(series_error("term at or beyond the O-term", src.len()));
            }
            out.known_up_to = Some(b);
        }
        Ok(out)
    }
}

/// Σ p_i(x)·y^i with coefficients on the left.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct OrePoly {
    coeffs: Vec<PuiseuxSeries>,
}

fn binomial(n: usize, k: usize) -> Rat {
    let mut r = Rat::one();
    for i in 0..k {
        r = r * Rat::from((n - i) as i64) / Rat::from((i + 1) as i64);
    }
    r
}

impl OrePoly {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(p: PuiseuxSeries) -> Self {
        Self::from_coeffs(vec![p])
    }

    pub fn y() -> Self {
        Self::from_coeffs(vec![PuiseuxSeries::zero(), PuiseuxSeries::one()])
    }

    pub fn from_coeffs(mut coeffs: Vec<PuiseuxSeries>) -> Self {
        while coeffs.last().is_some_and(|c| c.is_zero()) {
            coeffs.pop();
        }
        OrePoly { coeffs }
    }

    /// Image of a Weyl element: x^i y^j ↦ x^i·y^j.
    pub fn from_weyl(f: &WeylElement) -> Self {
        let mut coeffs = vec![PuiseuxSeries::zero(); f.y_degree().map_or(0, |d| d as usize + 1)];
        for (&(i, j), c) in f.terms() {
            coeffs[j as usize].add_term(Rat::from(-i), c.clone());
        }
        Self::from_coeffs(coeffs)
    }

    pub fn coeffs(&self) -> &[PuiseuxSeries] {
        &self.coeffs
    }

    pub fn coeff(&self, i: usize) -> PuiseuxSeries {
        self.coeffs.get(i).cloned().unwrap_or_default()
    }

    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn add(&self, o: &OrePoly) -> OrePoly {
        let n = self.coeffs.len().max(o.coeffs.len());
        Self::from_coeffs((0..n).map(|i| &self.coeff(i) + &o.coeff(i)).collect())
    }

    pub fn neg(&self) -> OrePoly {
        Self::from_coeffs(self.coeffs.iter().map(|c| -c).collect())
    }

    pub fn sub(&self, o: &OrePoly) -> OrePoly {
        self.add(&o.neg())
    }

    /// p·f.
    pub fn scale_left(&self, p: &PuiseuxSeries) -> OrePoly {
        Self::from_coeffs(self.coeffs.iter().map(|c| p * c).collect())
    }

    /// Product in R[y; δ], using y^i·q = Σ C(i,k) δ^k(q) y^{i−k}.
    pub fn mul(&self, o: &OrePoly) -> Result<OrePoly> {
        if self.is_zero() || o.is_zero() {
            return Ok(OrePoly::zero());
        }
        let n = self.coeffs.len() - 1;
        let mut out = vec![PuiseuxSeries::zero(); self.coeffs.len() + o.coeffs.len() - 1];
        for (j, q) in o.coeffs.iter().enumerate() {
            let mut derivs = vec![q.clone()];
            for k in 1..=n {
                let next = derivs[k - 1].delta();
                derivs.push(next);
            }
            for (i, p) in self.coeffs.iter().enumerate() {
                for (k, dq) in derivs.iter().enumerate().take(i + 1) {
                    if dq.is_zero() {
                        continue;
                    }
                    let term = (p * dq).scale(&binomial(i, k));
                    let slot = &mut out[i + j - k];
                    *slot = &*slot + &term;
                }
            }
        }
        let res = Self::from_coeffs(out);
        if let Some((i, _)) = res.coeffs.iter().enumerate().find(|(_, c)| c.is_unknown()) {
            return Err(Error::TruncationLoss(format!("coefficient of y^{i} lost all known terms")));
        }
        Ok(res)
    }

    pub fn pow(&self, n: u32) -> Result<OrePoly> {
        let mut acc = OrePoly::constant(PuiseuxSeries::one());
        for _ in 0..n {
            acc = acc.mul(self)?;
        }
        Ok(acc)
    }

    /// f(y + a) rewritten in powers of y, Ore products throughout.
    pub fn shift(&self, a: &PuiseuxSeries) -> Result<OrePoly> {
        let step = OrePoly::from_coeffs(vec![a.clone(), PuiseuxSeries::one()]);
        let mut acc = OrePoly::zero();
        for p in self.coeffs.iter().rev() {
            acc = acc.mul(&step)?.add(&OrePoly::constant(p.clone()));
        }
        Ok(acc)
    }

    /// Σ p_i·(t + a)^i with t commuting with the coefficients.
    pub fn commutative_shift(&self, a: &PuiseuxSeries) -> OrePoly {
        let n = self.coeffs.len();
        let mut powers = vec![PuiseuxSeries::one()];
        for k in 1..n {
            let next = &powers[k - 1] * a;
            powers.push(next);
        }
        let mut out = vec![PuiseuxSeries::zero(); n];
        for (i, p) in self.coeffs.iter().enumerate() {
            for (j, slot) in out.iter_mut().enumerate().take(i + 1) {
                let term = (p * &powers[i - j]).scale(&binomial(i, j));
                *slot = &*slot + &term;
            }
        }
        Self::from_coeffs(out)
    }
}

impl fmt::Display for OrePoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let parts: Vec<String> = self
            .coeffs
            .iter()
            .enumerate()
            .filter(|(_, c)| !c.is_zero())
            .map(|(i, c)| match i {
                0 => format!("({c})"),
                1 => format!("({c})*y"),
                _ => format!("({c})*y^{i}"),
            })
            .collect();
        write!(f, "{}", parts.join(" + "))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parse::parse;
    use proptest::prelude::*;

    fn s(src: &str) -> PuiseuxSeries {
        src.parse().unwrap()
    }

    #[test]
    fn text_round_trip() {
        let a = s("1*x^(-1/2) + 3*x^(-2) + O(x^(-5))");
        assert_eq!(a.terms().len(), 2);
        assert_eq!(a.known_up_to(), Some(&Rat::from(5)));
        assert_eq!(a.to_string(), "1*x^(-1/2) + 3*x^(-2) + O(x^(-5))");
        assert_eq!(s(&a.to_string()), a);
        assert_eq!(s("2 - x^(1) + 1/2*x^(-3/4)").to_string(), "-1*x^(1) + 2 + 1/2*x^(-3/4)");
        assert_eq!(s("0"), PuiseuxSeries::zero());
        assert!("1*x^(-6) + O(x^(-5))".parse::<PuiseuxSeries>().is_err());
    }

    #[test]
    fn derivative() {
        assert_eq!(s("x^(-1/2)").delta(), s("-1/2*x^(-3/2)"));
        assert!(PuiseuxSeries::one().delta().is_zero());
        assert_eq!(s("x^(-1) + 2*x^(-2)").delta(), s("-1*x^(-2) - 4*x^(-3)"));
        assert_eq!(s("x^(-1) + O(x^(-3))").delta().known_up_to(), Some(&Rat::from(4)));
    }

    #[test]
    fn truncated_products() {
        let a = s("x^(-1) + O(x^(-2))");
        let b = s("x^(1) + x^(-1/2) + O(x^(-1))");
        let p = &a * &b;
        assert_eq!(p.known_up_to(), Some(&Rat::from(1)));
        assert_eq!(p.to_string(), "1 + O(x^(-1))");
        assert_eq!(p.value().unwrap(), Value::zero());
        let lost = s("O(x^(-1))");
        assert!(matches!((&lost * &lost).value(), Err(Error::TruncationLoss(_))));
    }

    #[test]
    fn ore_products() {
        let y = OrePoly::y();
        let xinv = OrePoly::constant(PuiseuxSeries::x_pow(-1));
        let prod = y.mul(&xinv).unwrap();
        assert_eq!(prod, OrePoly::from_coeffs(vec![s("-1*x^(-2)"), s("x^(-1)")]));
        let commutator = prod.sub(&xinv.mul(&y).unwrap());
        assert_eq!(commutator, OrePoly::constant(PuiseuxSeries::x_pow(-2).scale(&Rat::from(-1))));
        let f = OrePoly::from_weyl(&parse("x*y^2 - 3").unwrap());
        assert_eq!(f.mul(&OrePoly::constant(PuiseuxSeries::one())).unwrap(), f);
        let y2x = y.pow(2).unwrap().mul(&OrePoly::constant(PuiseuxSeries::x_pow(1))).unwrap();
        assert_eq!(y2x, OrePoly::from_weyl(&parse("x*y^2 + 2*y").unwrap()));
        let lossy = OrePoly::constant(s("O(x^(-1))"));
        assert!(matches!(lossy.mul(&lossy), Err(Error::TruncationLoss(_))));
    }

    #[test]
    fn shifts() {
        let a = s("x^(-1/2)");
        let f = OrePoly::from_weyl(&parse("y^2").unwrap());
        // (y + a)² = y² + 2a·y + a² + δ(a)
        let g = f.shift(&a).unwrap();
        assert_eq!(g.coeff(2), PuiseuxSeries::one());
        assert_eq!(g.coeff(1), a.scale(&Rat::from(2)));
        assert_eq!(g.coeff(0), &(&a * &a) + &a.delta());
        let h = f.commutative_shift(&a);
        assert_eq!(h.coeff(0), &a * &a);
        assert_eq!(g.shift(&-&a).unwrap(), f);
    }

    fn arb_series() -> impl Strategy<Value = PuiseuxSeries> {
        proptest::collection::vec((-4i64..5, 1i64..3, -3i64..4), 0..3).prop_map(|ts| {
            PuiseuxSeries::from_terms(ts.into_iter().map(|(n, d, c)| (Rat::new(n, d), Rat::from(c))))
        })
    }

    fn arb_ore() -> impl Strategy<Value = OrePoly> {
        proptest::collection::vec(arb_series(), 0..4).prop_map(OrePoly::from_coeffs)
    }

    fn embed_weyl(f: &WeylElement) -> OrePoly {
        OrePoly::from_weyl(f)
    }

    proptest! {
        #[test]
        fn ore_mul_associative(f in arb_ore(), g in arb_ore(), h in arb_ore()) {
            let l = f.mul(&g).unwrap().mul(&h).unwrap();
            let r = f.mul(&g.mul(&h).unwrap()).unwrap();
            prop_assert_eq!(l, r);
        }

        #[test]
        fn delta_shifts_value(p in arb_series()) {
            if let Some((q, _)) = p.leading() {
                if !q.is_zero() {
                    prop_assert_eq!(p.delta().value().unwrap(), Value::rational(q + Rat::one()));
                }
            }
        }

        #[test]
        fn embedding_is_multiplicative(a in proptest::collection::vec((0i64..3, 0u32..3, -3i64..4), 0..4),
                                        b in proptest::collection::vec((0i64..3, 0u32..3, -3i64..4), 0..4)) {
            let f = WeylElement::from_terms(a.into_iter().map(|(i, j, c)| ((i, j), Rat::from(c))));
            let g = WeylElement::from_terms(b.into_iter().map(|(i, j, c)| ((i, j), Rat::from(c))));
            prop_assert_eq!(embed_weyl(&f.times(&g)), embed_weyl(&f).mul(&embed_weyl(&g)).unwrap());
        }
    }
}
