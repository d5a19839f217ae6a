//! The value group ℚ ⊕ ℤξ ⊕ ℤμ with ξ = c·√2 and μ a positive infinitesimal.
//!
//! Internally the irrational part is kept as the rational coefficient of √2,
//! so that values coming from descriptors with different scales still compare
//! exactly. The ξ-multiplier is recovered with [`Value::k_xi`].

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Neg, Sub};

use serde_json::json;

use crate::rat::Rat;

#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub enum Value {
    /// `q + s2·√2 − mu·μ`
    Finite { q: Rat, s2: Rat, mu: i64 },
    Infinity,
}

/// Sign of a + b√2.
pub fn sign_sqrt2(a: &Rat, b: &Rat) -> i32 {
    let sa = a.signum();
    let sb = b.signum();
    if sb == 0 {
        return sa;
    }
    if sa == 0 || sa == sb {
        return sb;
    }
    let a2 = a * a;
    let b2 = Rat::from(2) * b * b;
    match a2.cmp(&b2) {
        Ordering::Greater => sa,
        Ordering::Less => sb,
        Ordering::Equal => 0,
    }
}

impl Value {
    pub fn zero() -> Value {
        Value::rational(Rat::zero())
    }

    pub fn rational(q: Rat) -> Value {
        Value::Finite {
            q,
            s2: Rat::zero(),
            mu: 0,
        }
    }

    pub fn new(q: Rat, s2: Rat, mu: i64) -> Value {
        Value::Finite { q, s2, mu }
    }

    /// `q + k_xi·scale·√2 − k_mu·μ`.
    pub fn with_scale(q: Rat, k_xi: i64, scale: &Rat, k_mu: i64) -> Value {
        Value::Finite {
            q,
            s2: Rat::from(k_xi) * scale,
            mu: k_mu,
        }
    }

    pub fn int(n: i64) -> Value {
        Value::rational(Rat::from(n))
    }

    pub fn is_infinite(&self) -> bool {
        matches!(self, Value::Infinity)
    }

    pub fn is_zero(&self) -> bool {
        *self == Value::zero()
    }

    pub fn q(&self) -> Option<&Rat> {
        match self {
            Value::Finite { q, .. } => Some(q),
            Value::Infinity => None,
        }
    }

    pub fn s2(&self) -> Option<&Rat> {
        match self {
            Value::Finite { s2, .. } => Some(s2),
            Value::Infinity => None,
        }
    }

    pub fn mu(&self) -> i64 {
        match self {
            Value::Finite { mu, .. } => *mu,
            Value::Infinity => 0,
        }
    }

    /// Rational value, if the irrational and infinitesimal parts vanish.
    pub fn as_rational(&self) -> Option<&Rat> {
        match self {
            Value::Finite { q, s2, mu } if s2.is_zero() && *mu == 0 => Some(q),
            _ => None,
        }
    }

    pub fn is_rational(&self) -> bool {
        self.as_rational().is_some()
    }

    /// Multiplier of ξ = scale·√2, when it is an integer.
    pub fn k_xi(&self, scale: &Rat) -> Option<i64> {
        self.s2().and_then(|s| (s / scale).to_i64())
    }

    pub fn scale(&self, n: i64) -> Value {
        match self {
            Value::Finite { q, s2, mu } => Value::Finite {
                q: q * Rat::from(n),
                s2: s2 * Rat::from(n),
                mu: mu * n,
            },
            Value::Infinity => {
                assert!(n > 0, "scaling infinity by a non-positive integer");
                Value::Infinity
            }
        }
    }

    /// Multiplication by a rational, used for solving λ = (v − B)/l.
    pub fn scale_rat(&self, r: &Rat) -> Value {
        match self {
            Value::Finite { q, s2, mu } => {
                assert!(*mu == 0 || r.is_integer(), "infinitesimal part scaled by fraction");
                Value::Finite {
                    q: q * r,
                    s2: s2 * r,
                    mu: mu * r.to_i64().unwrap_or(0),
                }
            }
            Value::Infinity => Value::Infinity,
        }
    }

    /// Rational lower bound strictly below the value (for truncation windows).
    pub fn rational_floor(&self, denom: i64) -> Option<Rat> {
        match self {
            Value::Finite { q, s2, mu } => {
                let approx = q.to_f64() + s2.to_f64() * std::f64::consts::SQRT_2;
                let mut k = (approx * denom as f64).floor() as i64 - 1;
                loop {
                    let cand = Rat::new(k, denom);
                    let v = Value::rational(cand.clone());
                    if v < *self || (*mu > 0 && v <= *self) {
                        return Some(cand);
                    }
                    k -= 1;
                }
            }
            Value::Infinity => None,
        }
    }

    pub fn to_json(&self, scale: &Rat) -> serde_json::Value {
        match self {
            Value::Infinity => json!("infinity"),
            Value::Finite { q, s2, mu } => match self.k_xi(scale) {
                Some(k) => json!({"q": q.to_string(), "k_xi": k, "k_mu": mu}),
                None => json!({"q": q.to_string(), "sqrt2": s2.to_string(), "k_mu": mu}),
            },
        }
    }

    pub fn display(&self, scale: &Rat) -> String {
        match self {
            Value::Infinity => "infinity".into(),
            Value::Finite { q, s2, mu } => {
                let mut parts: Vec<String> = Vec::new();
                if !q.is_zero() {
                    parts.push(q.to_string());
                }
                if !s2.is_zero() {
                    match self.k_xi(scale) {
                        Some(k) => parts.push(format!("{k}*XI")),
                        None => parts.push(format!("{s2}*SQRT2")),
                    }
                }
                let mut s = parts.join(" + ");
                if *mu != 0 {
                    let t = if *mu > 0 {
                        format!("{}*MU", mu)
                    } else {
                        format!("{}*MU", -mu)
                    };
                    if s.is_empty() {
                        s = if *mu > 0 { format!("-{t}") } else { t };
                    } else {
                        s = format!("{s} {} {t}", if *mu > 0 { "-" } else { "+" });
                    }
                }
                if s.is_empty() {
                    "0".into()
                } else {
                    s.replace("+ -", "- ")
                }
            }
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.display(&Rat::one()))
    }
}

impl Ord for Value {
    fn cmp(&self, other: &Value) -> Ordering {
        match (self, other) {
            (Value::Infinity, Value::Infinity) => Ordering::Equal,
            (Value::Infinity, _) => Ordering::Greater,
            (_, Value::Infinity) => Ordering::Less,
            (
                Value::Finite { q: a, s2: b, mu: m },
                Value::Finite { q: c, s2: d, mu: n },
            ) => match sign_sqrt2(&(a - c), &(b - d)) {
                1 => Ordering::Greater,
                -1 => Ordering::Less,
                _ => n.cmp(m),
            },
        }
    }
}

impl PartialOrd for Value {
    fn partial_cmp(&self, other: &Value) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Add for &Value {
    type Output = Value;
    fn add(self, o: &Value) -> Value {
        match (self, o) {
            (Value::Finite { q, s2, mu }, Value::Finite { q: p, s2: t, mu: n }) => Value::Finite {
                q: q + p,
                s2: s2 + t,
                mu: mu + n,
            },
            _ => Value::Infinity,
        }
    }
}

impl Add for Value {
    type Output = Value;
    fn add(self, o: Value) -> Value {
        &self + &o
    }
}

impl Neg for &Value {
    type Output = Value;
    fn neg(self) -> Value {
        match self {
            Value::Finite { q, s2, mu } => Value::Finite {
                q: -q,
                s2: -s2,
                mu: -mu,
            },
            Value::Infinity => panic!("negation of infinity"),
        }
    }
}

impl Neg for Value {
    type Output = Value;
    fn neg(self) -> Value {
        -&self
    }
}

impl Sub for &Value {
    type Output = Value;
    fn sub(self, o: &Value) -> Value {
        self + &(-o)
    }
}

impl Sub for Value {
    type Output = Value;
    fn sub(self, o: Value) -> Value {
        &self - &o
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn v(q: &str, k: i64, mu: i64) -> Value {
        Value::with_scale(q.parse().unwrap(), k, &"1/8".parse().unwrap(), mu)
    }

    #[test]
    fn examples() {
        assert_eq!(v("0", 0, 0).cmp(&v("0", 0, 0)), Ordering::Equal);
        assert!(v("1/4", 0, 0) > v("0", 1, 0));
        assert!(v("1", 0, 0) > v("1", 0, 1));
        assert_eq!(v("1/2", 0, 0) + v("-1", 0, 0), v("-1/2", 0, 0));
        assert_eq!(v("1/3", 2, 1).scale(3), v("1", 6, 3));
        assert!(Value::Infinity > v("1000", 5, -3));
        assert_eq!(&v("1/2", 1, 0) + &Value::zero(), v("1/2", 1, 0));
    }

    #[test]
    fn sqrt2_sign() {
        let r = |s: &str| s.parse::<Rat>().unwrap();
        assert_eq!(sign_sqrt2(&r("3"), &r("-2")), 1);
        assert_eq!(sign_sqrt2(&r("1"), &r("-1")), -1);
        assert_eq!(sign_sqrt2(&r("-7/5"), &r("1")), 1);
        assert_eq!(sign_sqrt2(&r("0"), &r("0")), 0);
    }

    #[test]
    fn text_form() {
        let s: Rat = "1/8".parse().unwrap();
        assert_eq!(v("1/2", 1, 0).display(&s), "1/2 + 1*XI");
        assert_eq!(v("1", 0, 1).display(&s), "1 - 1*MU");
        assert_eq!(v("0", 0, 0).display(&s), "0");
        assert_eq!(Value::Infinity.display(&s), "infinity");
    }

    fn arb() -> impl Strategy<Value = Value> {
        (-30i64..30, 1i64..9, -4i64..4, -3i64..3).prop_map(|(n, d, k, m)| {
            Value::with_scale(Rat::new(n, d), k, &Rat::new(1, 8), m)
        })
    }

    proptest! {
        #[test]
        fn group_and_order(a in arb(), b in arb(), c in arb()) {
            prop_assert_eq!(&(&a + &b) + &c, &a + &(&b + &c));
            prop_assert_eq!(&a + &b, &b + &a);
            prop_assert_eq!(&a - &a, Value::zero());
            prop_assert_eq!(a.cmp(&b), b.cmp(&a).reverse());
            if a < b {
                prop_assert!(&a + &c < &b + &c);
                if b < c { prop_assert!(a < c); }
            }
        }

        #[test]
        fn order_matches_float(a in arb(), b in arb()) {
            let f = |x: &Value| x.q().unwrap().to_f64() + x.s2().unwrap().to_f64() * 2f64.sqrt();
            if (f(&a) - f(&b)).abs() > 1e-9 {
                prop_assert_eq!(a < b, f(&a) < f(&b));
            }
        }
    }
}
