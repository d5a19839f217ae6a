//! Key-sequence descriptors ω_i = x^{m_i}·ω_{i−1}^{n_i} − β_i.
//!
//! Index conventions: ω_{−1} = x, ω_0 = y, step i (1-based) defines ω_i and
//! fixes v(ω_{i−1}) = m_i/n_i. Pair computations use indices p ≥ 0 with
//! p ↔ ω_{p−1} and the extra datum (m_0, n_0, β_0) = (1, −1, 1) for x.

use std::collections::BTreeMap;
use std::fmt;

use num_integer::Integer;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::{Error, Result};
use crate::lattice::ResidueLattice;
use crate::rat::{two_adic_valuation, Rat};
use crate::value::Value;
use crate::weyl::WeylElement;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OmegaStep {
    pub m: i64,
    pub n: i64,
    pub beta: Rat,
}

impl OmegaStep {
    pub fn new(m: i64, n: i64, beta: impl Into<Rat>) -> Self {
        OmegaStep {
            m,
            n,
            beta: beta.into(),
        }
    }

    pub fn value(&self) -> Rat {
        Rat::new(self.m, self.n)
    }
}

/// Closed-form infinite continuations.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Rule {
    /// Step i is (1, 2^i, 1).
    Halving,
    /// Step i is (m, n^i, β).
    Constant { m: i64, n: i64, beta: Rat },
}

impl Rule {
    pub fn parse(s: &str) -> Result<Rule> {
        let t: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        if t == "halving" {
            return Ok(Rule::Halving);
        }
        let bad = || Error::InvalidDescriptor(format!("unknown rule {s:?}"));
        let args = t
            .strip_prefix("constant(")
            .and_then(|r| r.strip_suffix(')'))
            .ok_or_else(bad)?;
        let parts: Vec<&str> = args.split(',').collect();
        if parts.len() != 3 {
            return Err(bad());
        }
        let m: i64 = parts[0].parse().map_err(|_| bad())?;
        let n: i64 = parts[1].parse().map_err(|_| bad())?;
        let beta: Rat = parts[2].parse().map_err(|_| bad())?;
        if n < 2 || beta.is_zero() || m <= 0 || m.gcd(&n) != 1 {
            return Err(Error::InvalidDescriptor(format!(
                "rule {s:?} needs m > 0, n ≥ 2, gcd(m, n) = 1 and β ≠ 0"
            )));
        }
        Ok(Rule::Constant { m, n, beta })
    }

    pub fn name(&self) -> String {
        match self {
            Rule::Halving => "halving".into(),
            Rule::Constant { m, n, beta } => format!("constant({m},{n},{beta})"),
        }
    }

    pub fn step(&self, i: usize) -> Result<OmegaStep> {
        let (m, base, beta) = match self {
            Rule::Halving => (1, 2i64, Rat::one()),
            Rule::Constant { m, n, beta } => (*m, *n, beta.clone()),
        };
        let n = u32::try_from(i)
            .ok()
            .and_then(|e| base.checked_pow(e))
            .ok_or_else(|| Error::Unsupported(format!("step {i} of {} overflows", self.name())))?;
        Ok(OmegaStep { m, n, beta })
    }

    /// Whether the 2-adic exponents h_i grow without bound.
    pub fn unbounded_h(&self) -> bool {
        match self {
            Rule::Halving => true,
            Rule::Constant { n, .. } => n % 2 == 0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum GroupKind {
    #[serde(rename = "two_divisible", alias = "TwoDivisibleRationalSubgroup")]
    TwoDivisible,
    #[serde(rename = "non_two_divisible", alias = "NonTwoDivisibleRationalSubgroup")]
    NonTwoDivisible,
    #[serde(rename = "rank_two", alias = "RankTwo")]
    RankTwo,
}

impl GroupKind {
    pub fn name(self) -> &'static str {
        match self {
            GroupKind::TwoDivisible => "two_divisible",
            GroupKind::NonTwoDivisible => "non_two_divisible",
            GroupKind::RankTwo => "rank_two",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Tail {
    Finite,
    Irrational(Value),
    Rule {
        rule: Rule,
        declared: Option<GroupKind>,
        window: usize,
    },
}

pub const DEFAULT_WINDOW: usize = 8;

#[derive(Clone, Debug, PartialEq)]
pub struct OmegaDescriptor {
    pub steps: Vec<OmegaStep>,
    pub tail: Tail,
    /// Signs for pairs i < j where both n_i and n_j are even.
    pub alpha_signs: BTreeMap<(usize, usize), i8>,
    pub alpha_sign_default: Option<i8>,
    /// ξ = xi_scale·√2.
    pub xi_scale: Rat,
}

/// A failed validity condition.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub condition: &'static str,
    pub indices: Vec<i64>,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {:?}: {}", self.condition, self.indices, self.message)
    }
}

#[derive(Deserialize)]
struct RawValue {
    #[serde(default)]
    q: Option<Rat>,
    #[serde(default)]
    k_xi: i64,
    #[serde(default)]
    scale: Option<Rat>,
    #[serde(default)]
    k_mu: i64,
}

#[derive(Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum RawTail {
    Irrational {
        value: RawValue,
    },
    Rule {
        rule: String,
        #[serde(default)]
        group_kind: Option<GroupKind>,
        #[serde(default)]
        window: Option<usize>,
    },
    Finite,
}

#[derive(Deserialize)]
struct RawSign {
    i: usize,
    j: usize,
    sign: i8,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDescriptor {
    #[serde(default)]
    steps: Vec<OmegaStep>,
    #[serde(default)]
    tail: Option<RawTail>,
    #[serde(default)]
    alpha_signs: Vec<RawSign>,
    #[serde(default)]
    alpha_sign_default: Option<i8>,
}

fn check_sign(s: i8) -> Result<i8> {
    if s == 1 || s == -1 {
        Ok(s)
    } else {
        Err(Error::InvalidDescriptor(format!("sign must be 1 or -1, got {s}")))
    }
}

impl OmegaDescriptor {
    pub fn finite(steps: Vec<OmegaStep>) -> Self {
        OmegaDescriptor {
            steps,
            tail: Tail::Finite,
            alpha_signs: BTreeMap::new(),
            alpha_sign_default: None,
            xi_scale: Rat::one(),
        }
    }

    /// Steps followed by an irrational v(ω_N) = q + k·scale·√2.
    pub fn with_terminal(steps: Vec<OmegaStep>, q: Rat, k_xi: i64, scale: Rat) -> Self {
        let value = Value::with_scale(q, k_xi, &scale, 0);
        OmegaDescriptor {
            steps,
            tail: Tail::Irrational(value),
            alpha_signs: BTreeMap::new(),
            alpha_sign_default: None,
            xi_scale: scale,
        }
    }

    pub fn with_rule(steps: Vec<OmegaStep>, rule: Rule) -> Self {
        OmegaDescriptor {
            steps,
            tail: Tail::Rule {
                rule,
                declared: None,
                window: DEFAULT_WINDOW,
            },
            alpha_signs: BTreeMap::new(),
            alpha_sign_default: Some(1),
            xi_scale: Rat::one(),
        }
    }

    /// [(1,2,1),(1,4,1)] with v(ω_2) = √2/8 and α_{1,2} = 1.
    pub fn worked_example() -> Self {
        let mut d = OmegaDescriptor::with_terminal(
            vec![OmegaStep::new(1, 2, 1), OmegaStep::new(1, 4, 1)],
            Rat::zero(),
            1,
            Rat::new(1, 8),
        );
        d.alpha_signs.insert((1, 2), 1);
        d
    }

    pub fn halving() -> Self {
        OmegaDescriptor::with_rule(Vec::new(), Rule::Halving)
    }

    pub fn from_json(src: &str) -> Result<Self> {
        let raw: RawDescriptor = serde_json::from_str(src).map_err(|e| Error::Parse {
            message: e.to_string(),
            line: e.line(),
            column: e.column(),
        })?;
        let mut d = OmegaDescriptor::finite(raw.steps);
        match raw.tail {
            None | Some(RawTail::Finite) => {}
            Some(RawTail::Irrational { value }) => {
                let scale = value.scale.unwrap_or_else(Rat::one);
                if !scale.is_positive() {
                    return Err(Error::InvalidDescriptor("ξ scale must be positive".into()));
                }
                let v = Value::with_scale(value.q.unwrap_or_else(Rat::zero), value.k_xi, &scale, value.k_mu);
                d.tail = Tail::Irrational(v);
                d.xi_scale = scale;
            }
            Some(RawTail::Rule {
                rule,
                group_kind,
                window,
            }) => {
                d.tail = Tail::Rule {
                    rule: Rule::parse(&rule)?,
                    declared: group_kind,
                    window: window.unwrap_or(DEFAULT_WINDOW).max(d.steps.len()),
                };
                d.alpha_sign_default = Some(1);
            }
        }
        for s in raw.alpha_signs {
            let key = (s.i.min(s.j), s.i.max(s.j));
            d.alpha_signs.insert(key, check_sign(s.sign)?);
        }
        if let Some(s) = raw.alpha_sign_default {
            d.alpha_sign_default = Some(check_sign(s)?);
        }
        Ok(d)
    }

    pub fn to_json(&self) -> serde_json::Value {
        let steps: Vec<_> = self
            .steps
            .iter()
            .map(|s| json!({"m": s.m, "n": s.n, "beta": s.beta.to_string()}))
            .collect();
        let mut out = json!({ "steps": steps });
        match &self.tail {
            Tail::Finite => {}
            Tail::Irrational(v) => {
                out["tail"] = json!({
                    "kind": "irrational",
                    "value": {
                        "q": v.q().map(|q| q.to_string()),
                        "k_xi": v.k_xi(&self.xi_scale),
                        "scale": self.xi_scale.to_string(),
                        "k_mu": v.mu(),
                    }
                });
            }
            Tail::Rule {
                rule,
                declared,
                window,
            } => {
                out["tail"] = json!({
                    "kind": "rule",
                    "rule": rule.name(),
                    "group_kind": declared.map(|g| g.name()),
                    "window": window,
                });
            }
        }
        if !self.alpha_signs.is_empty() {
            out["alpha_signs"] = self
                .alpha_signs
                .iter()
                .map(|(&(i, j), &s)| json!({"i": i, "j": j, "sign": s}))
                .collect();
        }
        if let Some(s) = self.alpha_sign_default {
            out["alpha_sign_default"] = json!(s);
        }
        out
    }

    /// Number of explicitly rational steps, or None for an infinite rule.
    pub fn finite_len(&self) -> Option<usize> {
        match self.tail {
            Tail::Rule { .. } => None,
            _ => Some(self.steps.len()),
        }
    }

    /// Steps examined by validation and the checks built on it.
    pub fn window(&self) -> usize {
        match &self.tail {
            Tail::Rule { window, .. } => (*window).max(self.steps.len()),
            _ => self.steps.len(),
        }
    }

    pub fn terminal(&self) -> Option<&Value> {
        match &self.tail {
            Tail::Irrational(v) => Some(v),
            _ => None,
        }
    }

    /// Step i ≥ 1.
    pub fn step(&self, i: usize) -> Result<OmegaStep> {
        assert!(i >= 1, "steps are 1-based");
        if let Some(s) = self.steps.get(i - 1) {
            return Ok(s.clone());
        }
        match &self.tail {
            Tail::Rule { rule, .. } => rule.step(i),
            _ => Err(Error::DepthExceeded { limit: self.steps.len() }),
        }
    }

    /// (m_p, n_p, β_p) for pair index p ≥ 0.
    pub fn pair_step(&self, p: usize) -> Result<OmegaStep> {
        if p == 0 {
            Ok(OmegaStep::new(1, -1, 1))
        } else {
            self.step(p)
        }
    }

    /// 2-adic exponent of n_p.
    pub fn h(&self, p: usize) -> Result<u32> {
        let s = self.pair_step(p)?;
        Ok(two_adic_valuation(s.n.unsigned_abs()))
    }

    /// v(ω_k) for k ≥ −1.
    pub fn omega_value(&self, k: i64) -> Result<Value> {
        assert!(k >= -1);
        if k == -1 {
            return Ok(Value::int(-1));
        }
        let i = k as usize + 1;
        if i <= self.steps.len() || matches!(self.tail, Tail::Rule { .. }) {
            return Ok(Value::rational(self.step(i)?.value()));
        }
        match &self.tail {
            Tail::Irrational(v) if i == self.steps.len() + 1 => Ok(v.clone()),
            _ => Err(Error::DepthExceeded { limit: self.steps.len() }),
        }
    }

    /// (d, K_ij, K_ji) for pair indices i, j ≥ 0.
    pub fn pair_data(&self, i: usize, j: usize) -> Result<(i64, i64, i64)> {
        let a = self.pair_step(i)?;
        let b = self.pair_step(j)?;
        let mjni = b.m.checked_mul(a.n).ok_or_else(overflow)?;
        let minj = a.m.checked_mul(b.n).ok_or_else(overflow)?;
        let d = mjni.unsigned_abs().gcd(&minj.unsigned_abs()) as i64;
        Ok((d, mjni / d, minj / d))
    }

    /// α_{i,j}, the residue of ω_{i−1}^{K_ij}·ω_{j−1}^{−K_ji}.
    pub fn alpha(&self, i: usize, j: usize) -> Result<Rat> {
        if i == j {
            return Ok(Rat::one());
        }
        let a = self.pair_step(i)?;
        let b = self.pair_step(j)?;
        if a.n % 2 != 0 {
            let (d, _, _) = self.pair_data(i, j)?;
            let odd = d >> d.trailing_zeros();
            let l1 = odd * b.m / d;
            let l2 = odd * a.m / d;
            let rhs = a.beta.pow(l1) * b.beta.pow(-l2);
            return rhs.nth_root(u32::try_from(odd).map_err(|_| overflow())?);
        }
        if b.n % 2 != 0 {
            return Ok(self.alpha(j, i)?.recip());
        }
        let (d, _, _) = self.pair_data(i, j)?;
        let rhs = a.beta.pow(b.m) * b.beta.pow(-a.m);
        let mag = rhs.nth_root(u32::try_from(d).map_err(|_| overflow())?)?;
        let key = (i.min(j), i.max(j));
        let sign = self
            .alpha_signs
            .get(&key)
            .copied()
            .or(self.alpha_sign_default)
            .ok_or(Error::MissingSignChoice { i: key.0, j: key.1 })?;
        let alpha_small_first = if sign < 0 { -mag } else { mag };
        Ok(if i < j { alpha_small_first } else { alpha_small_first.recip() })
    }

    /// Closed-form v[ω_j, ω_i] for −1 ≤ i < j.
    pub fn commutator_value(&self, i: i64, j: i64) -> Result<Value> {
        assert!(-1 <= i && i < j);
        let mut s = Value::zero();
        for l in -1..j {
            if l != i {
                s = &s + &self.omega_value(l)?;
            }
        }
        Ok(-s)
    }

    pub fn group_kind(&self) -> Result<GroupKind> {
        match &self.tail {
            Tail::Irrational(_) => Ok(GroupKind::RankTwo),
            Tail::Finite => Ok(GroupKind::NonTwoDivisible),
            Tail::Rule { rule, declared, .. } => {
                let actual = if rule.unbounded_h() {
                    GroupKind::TwoDivisible
                } else {
                    GroupKind::NonTwoDivisible
                };
                match declared {
                    Some(d) if *d != actual => Err(Error::DeclarationInconsistent(format!(
                        "rule {} gives {} but {} was declared",
                        rule.name(),
                        actual.name(),
                        d.name()
                    ))),
                    _ => Ok(actual),
                }
            }
        }
    }

    /// Check every validity condition on the first `depth` steps.
    pub fn validate(&self, depth: usize) -> Vec<Violation> {
        let mut out = Vec::new();
        let depth = match self.finite_len() {
            Some(n) => depth.min(n),
            None => depth,
        };
        let mut steps = Vec::new();
        for i in 1..=depth {
            match self.step(i) {
                Ok(s) => steps.push(s),
                Err(e) => {
                    out.push(Violation {
                        condition: "StepForm",
                        indices: vec![i as i64],
                        message: e.to_string(),
                    });
                    return out;
                }
            }
        }
        for (k, s) in steps.iter().enumerate() {
            let i = k as i64 + 1;
            if s.n < 1 || s.beta.is_zero() || s.m.unsigned_abs().gcd(&s.n.unsigned_abs()) != 1 {
                out.push(Violation {
                    condition: "StepForm",
                    indices: vec![i],
                    message: format!("need n ≥ 1, β ≠ 0 and gcd(m, n) = 1, got ({}, {}, {})", s.m, s.n, s.beta),
                });
            }
            if i >= 2 && s.m <= 0 {
                out.push(Violation {
                    condition: "Positivity",
                    indices: vec![i - 1],
                    message: format!("v(ω_{}) = {} must be positive", i - 1, s.value()),
                });
            }
        }
        if !out.is_empty() {
            return out;
        }
        let mut sum = Value::int(-1);
        for (k, s) in steps.iter().enumerate() {
            sum = &sum + &Value::rational(s.value());
            if sum >= Value::zero() {
                out.push(Violation {
                    condition: "PrefixSum",
                    indices: vec![k as i64],
                    message: format!("v(x) + … + v(ω_{k}) = {sum} is not negative"),
                });
            }
        }
        if let Some(t) = self.terminal() {
            if t.k_xi(&self.xi_scale).unwrap_or(0) == 0 && t.s2().map_or(true, Rat::is_zero) {
                out.push(Violation {
                    condition: "Terminal",
                    indices: vec![steps.len() as i64],
                    message: "terminal value must have a nonzero ξ part".into(),
                });
            } else if *t <= Value::zero() || &sum + t >= Value::zero() {
                out.push(Violation {
                    condition: "Terminal",
                    indices: vec![steps.len() as i64],
                    message: format!("terminal value {} must be positive with negative prefix sum", t.display(&self.xi_scale)),
                });
            }
        }
        let even: Vec<usize> = (0..steps.len()).filter(|&k| steps[k].n % 2 == 0).collect();
        if let Some(&first) = even.first() {
            for &k in &even[1..] {
                if steps[k].beta.signum() != steps[first].beta.signum() {
                    out.push(Violation {
                        condition: "SignConstancy",
                        indices: vec![first as i64 + 1, k as i64 + 1],
                        message: format!("β_{} and β_{} have even n and different signs", first + 1, k + 1),
                    });
                }
            }
        }
        if !out.is_empty() {
            return out;
        }
        let p = steps.len();
        let mut alphas = BTreeMap::new();
        for i in 0..=p {
            for j in i + 1..=p {
                match self.alpha(i, j) {
                    Ok(a) => {
                        alphas.insert((i, j), a);
                    }
                    Err(e) => out.push(Violation {
                        condition: match e {
                            Error::MissingSignChoice { .. } => "MissingSignChoice",
                            Error::NoRationalRoot { .. } => "NoRationalRoot",
                            _ => "Alpha",
                        },
                        indices: vec![i as i64, j as i64],
                        message: e.to_string(),
                    }),
                }
            }
        }
        if !out.is_empty() {
            return out;
        }
        let sgn = |a: usize, b: usize| -> i32 {
            if a < b {
                alphas[&(a, b)].signum()
            } else {
                alphas[&(b, a)].signum()
            }
        };
        let h: Vec<u32> = (0..=p).map(|q| self.h(q).unwrap_or(0)).collect();
        for a in 0..=p {
            for b in a + 1..=p {
                if h[a] != h[b] {
                    continue;
                }
                for c in 0..=p {
                    if c == a || c == b || h[c] < h[a] {
                        continue;
                    }
                    if sgn(a, b) * sgn(a, c) * sgn(b, c) < 0 {
                        out.push(Violation {
                            condition: "Dvojicedet",
                            indices: vec![a as i64, b as i64, c as i64],
                            message: format!("α_{a},{b}·α_{a},{c}·α_{b},{c} < 0"),
                        });
                    }
                }
            }
        }
        if let Err(e) = self.group_kind() {
            out.push(Violation {
                condition: "DeclarationInconsistent",
                indices: vec![],
                message: e.to_string(),
            });
        }
        out
    }

    /// Validate over the descriptor's window, as an error.
    pub fn check(&self) -> Result<()> {
        let v = self.validate(self.window());
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidDescriptor(
                v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join("; "),
            ))
        }
    }

    /// ω_0..ω_k with signed x-exponents allowed.
    pub fn omega_laurent_chain(&self, k: usize) -> Result<Vec<WeylElement>> {
        let mut out = vec![WeylElement::y()];
        for i in 1..=k {
            let s = self.step(i)?;
            let n = u32::try_from(s.n).map_err(|_| overflow())?;
            let w = out[i - 1].pow(n).shift_x(s.m) - WeylElement::constant(s.beta);
            out.push(w);
        }
        Ok(out)
    }

    pub fn omega_laurent(&self, k: usize) -> Result<WeylElement> {
        Ok(self.omega_laurent_chain(k)?.pop().expect("chain is nonempty"))
    }

    /// ω_k as a polynomial.
    pub fn omega_element(&self, k: usize) -> Result<WeylElement> {
        for i in 1..=k {
            if self.step(i)?.m < 0 {
                return Err(Error::NegativeXPower { i });
            }
        }
        self.omega_laurent(k)
    }

    /// [ω_k, x] through the recursive expansion
    /// X_1 = n_1 x^{m_1} y^{n_1−1}, X_i = x^{m_i} Σ_ℓ ω_{i−1}^{n_i−ℓ} X_{i−1} ω_{i−1}^{ℓ−1}.
    pub fn xkom_expansion(&self, k: usize) -> Result<WeylElement> {
        assert!(k >= 1);
        let chain = self.omega_laurent_chain(k)?;
        let s1 = self.step(1)?;
        let mut xk = WeylElement::monomial(Rat::from(s1.n), s1.m, (s1.n - 1) as u32);
        for i in 2..=k {
            let s = self.step(i)?;
            let w = &chain[i - 1];
            let n = s.n as u32;
            let mut powers = vec![WeylElement::one()];
            for _ in 1..n {
                let next = powers.last().unwrap().times(w);
                powers.push(next);
            }
            let mut acc = WeylElement::zero();
            for l in 1..=n {
                acc = acc + powers[(n - l) as usize].times(&xk).times(&powers[(l - 1) as usize]);
            }
            xk = acc.shift_x(s.m);
        }
        Ok(xk)
    }

    /// Lattice of value-zero exponent vectors over ω_{−1}..ω_{p_max−1},
    /// labelled by residues, generated by all pair relations.
    pub fn residue_lattice(&self, p_max: usize) -> Result<ResidueLattice> {
        let mut lat = ResidueLattice::new(p_max + 1);
        for i in 0..=p_max {
            for j in i + 1..=p_max {
                let (_, kij, kji) = self.pair_data(i, j)?;
                let mut v = vec![0i128; p_max + 1];
                v[i] = kij as i128;
                v[j] = -(kji as i128);
                lat.insert(&v, self.alpha(i, j)?)?;
            }
        }
        Ok(lat)
    }
}

fn overflow() -> Error {
    Error::Unsupported("descriptor data exceed machine integers".into())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parse::parse;
    use proptest::prelude::*;

    fn conds(d: &OmegaDescriptor) -> Vec<&'static str> {
        d.validate(d.window()).into_iter().map(|v| v.condition).collect()
    }

    #[test]
    fn validation_examples() {
        let w = OmegaDescriptor::worked_example();
        assert!(conds(&w).is_empty());
        let d = OmegaDescriptor::finite(vec![OmegaStep::new(1, 2, 1), OmegaStep::new(1, 4, -1)]);
        assert!(conds(&d).contains(&"SignConstancy"));
        let d = OmegaDescriptor::finite(vec![OmegaStep::new(1, 2, 1), OmegaStep::new(3, 4, 1)]);
        assert!(conds(&d).contains(&"PrefixSum"));
        let mut d = OmegaDescriptor::worked_example();
        d.alpha_signs.clear();
        assert_eq!(conds(&d), vec!["MissingSignChoice"]);
        let d = OmegaDescriptor::finite(vec![OmegaStep::new(1, 3, 2), OmegaStep::new(1, 9, 1)]);
        assert!(conds(&d).contains(&"NoRationalRoot"));
        assert!(conds(&OmegaDescriptor::halving()).is_empty());
    }

    #[test]
    fn pair_data_examples() {
        let w = OmegaDescriptor::worked_example();
        assert_eq!(w.pair_data(1, 2).unwrap(), (2, 1, 2));
        assert_eq!(w.pair_data(0, 1).unwrap(), (1, -1, 2));
        assert_eq!(w.alpha(1, 2).unwrap(), Rat::one());
        assert_eq!(w.alpha(2, 2).unwrap(), Rat::one());
        let mut neg = w.clone();
        neg.alpha_signs.insert((1, 2), -1);
        assert_eq!(neg.alpha(1, 2).unwrap(), Rat::from(-1));
        assert_eq!(neg.alpha(2, 1).unwrap(), Rat::from(-1));
        let (d, kij, kji) = w.pair_data(0, 2).unwrap();
        assert_eq!((d, kij, kji), (1, -1, 4));
    }

    #[test]
    fn commutator_values() {
        let w = OmegaDescriptor::worked_example();
        assert_eq!(w.commutator_value(-1, 0).unwrap(), Value::zero());
        assert_eq!(w.commutator_value(-1, 1).unwrap(), Value::rational(Rat::new(-1, 2)));
        assert_eq!(w.commutator_value(0, 1).unwrap(), Value::int(1));
        for j in 0..=2i64 {
            for i in -1..j {
                let c = w.commutator_value(i, j).unwrap();
                let s = &w.omega_value(i).unwrap() + &w.omega_value(j).unwrap();
                assert!(c > s, "({i},{j})");
            }
        }
    }

    #[test]
    fn group_kinds() {
        assert_eq!(OmegaDescriptor::worked_example().group_kind().unwrap(), GroupKind::RankTwo);
        assert_eq!(OmegaDescriptor::halving().group_kind().unwrap(), GroupKind::TwoDivisible);
        let c = OmegaDescriptor::with_rule(vec![], Rule::parse("constant(1,3,1)").unwrap());
        assert_eq!(c.group_kind().unwrap(), GroupKind::NonTwoDivisible);
        let bad = OmegaDescriptor::from_json(
            r#"{"tail":{"kind":"rule","rule":"halving","group_kind":"non_two_divisible"}}"#,
        )
        .unwrap();
        assert!(matches!(bad.group_kind(), Err(Error::DeclarationInconsistent(_))));
        assert!(conds(&bad).contains(&"DeclarationInconsistent"));
    }

    #[test]
    fn omega_elements() {
        let w = OmegaDescriptor::worked_example();
        assert_eq!(w.omega_element(0).unwrap(), WeylElement::y());
        assert_eq!(w.omega_element(1).unwrap(), parse("x*y^2 - 1").unwrap());
        assert_eq!(w.omega_element(2).unwrap(), parse("x*(x*y^2 - 1)^4 - 1").unwrap());
        let neg = OmegaDescriptor::finite(vec![OmegaStep::new(-1, 2, 1)]);
        assert!(matches!(neg.omega_element(1), Err(Error::NegativeXPower { i: 1 })));
        assert_eq!(neg.omega_laurent(1).unwrap(), parse("x^-1*y^2 - 1").unwrap());
    }

    #[test]
    fn xkom_matches_commutator() {
        let descs = [
            OmegaDescriptor::worked_example(),
            OmegaDescriptor::finite(vec![OmegaStep::new(1, 3, 8), OmegaStep::new(1, 2, 1), OmegaStep::new(1, 3, 2)]),
            OmegaDescriptor::finite(vec![OmegaStep::new(-1, 2, 1), OmegaStep::new(1, 2, 3)]),
        ];
        for d in &descs {
            for k in 1..=d.steps.len().min(3) {
                let w = d.omega_laurent(k).unwrap();
                assert_eq!(d.xkom_expansion(k).unwrap(), w.commutator(&WeylElement::x()), "k = {k}");
            }
        }
    }

    #[test]
    fn json_round_trip() {
        let src = r#"{"steps":[{"m":1,"n":2,"beta":"1"},{"m":1,"n":4,"beta":1}],
            "tail":{"kind":"irrational","value":{"q":"0","k_xi":1,"scale":"1/8"}},
            "alpha_signs":[{"i":2,"j":1,"sign":1}]}"#;
        let d = OmegaDescriptor::from_json(src).unwrap();
        assert_eq!(d, OmegaDescriptor::worked_example());
        let again = OmegaDescriptor::from_json(&d.to_json().to_string()).unwrap();
        assert_eq!(again, d);
        let r = OmegaDescriptor::from_json(r#"{"tail":{"kind":"rule","rule":"constant(1, 3, -1)"}}"#).unwrap();
        assert_eq!(r.step(2).unwrap(), OmegaStep::new(1, 9, -1));
        assert!(OmegaDescriptor::from_json(r#"{"tail":{"kind":"rule","rule":"cubic"}}"#).is_err());
        assert!(matches!(OmegaDescriptor::from_json("{\"steps\": [}"), Err(Error::Parse { .. })));
    }

    #[test]
    fn lattice_of_worked_example() {
        let w = OmegaDescriptor::worked_example();
        let lat = w.residue_lattice(2).unwrap();
        // x·y² and x·ω_1⁴ have residue 1
        assert_eq!(lat.reduce(&[1, 2, 0]).unwrap(), Some(Rat::one()));
        assert_eq!(lat.reduce(&[1, 0, 4]).unwrap(), Some(Rat::one()));
        assert_eq!(lat.reduce(&[1, 1, 0]).unwrap(), None);
        let mut twisted = OmegaDescriptor::finite(vec![
            OmegaStep::new(1, 2, 1),
            OmegaStep::new(1, 4, 1),
            OmegaStep::new(1, 8, 1),
        ]);
        twisted.alpha_signs.insert((1, 2), 1);
        twisted.alpha_signs.insert((1, 3), -1);
        twisted.alpha_signs.insert((2, 3), 1);
        assert!(conds(&twisted).is_empty());
        assert!(matches!(twisted.residue_lattice(3), Err(Error::ResidueInconsistent(_))));
    }

    fn arb_desc() -> impl Strategy<Value = OmegaDescriptor> {
        proptest::collection::vec((1i64..4, 1i64..7, prop_oneof![Just(1i64), Just(8), Just(-1)]), 1..4).prop_map(
            |raw| {
                let mut steps = Vec::new();
                let mut sum = Rat::from(-1);
                for (m, n, b) in raw {
                    let (m, n) = if m.gcd(&n) == 1 { (m, n) } else { (1, n) };
                    let v = Rat::new(m, n);
                    if (&sum + &v).is_negative() && (steps.is_empty() || m > 0) {
                        sum = sum + v;
                        let beta = if n % 2 == 0 { Rat::one() } else { Rat::from(b) };
                        steps.push(OmegaStep::new(m, n, beta));
                    }
                }
                if steps.is_empty() {
                    steps.push(OmegaStep::new(1, 2, 1));
                }
                let mut d = OmegaDescriptor::finite(steps);
                d.alpha_sign_default = Some(1);
                d
            },
        )
    }

    proptest! {
        #[test]
        fn pair_identities(d in arb_desc()) {
            let p = d.steps.len();
            for i in 0..=p {
                for j in 0..=p {
                    let (dd, kij, kji) = d.pair_data(i, j).unwrap();
                    let a = d.pair_step(i).unwrap();
                    let b = d.pair_step(j).unwrap();
                    prop_assert_eq!(kij * a.m * b.n, kji * b.m * a.n);
                    if let Ok(al) = d.alpha(i, j) {
                        prop_assert_eq!(&al * d.alpha(j, i).unwrap(), Rat::one());
                        let rhs = a.beta.pow(b.m) * b.beta.pow(-a.m);
                        prop_assert_eq!(al.pow(dd), rhs);
                    }
                }
            }
        }

        #[test]
        fn pair_relations_span_the_kernel(d in arb_desc()) {
            prop_assume!(d.validate(d.window()).is_empty());
            let p = d.steps.len();
            let Ok(lat) = d.residue_lattice(p) else { return Ok(()) };
            let vals: Vec<Rat> = (0..=p).map(|q| d.omega_value(q as i64 - 1).unwrap().as_rational().unwrap().clone()).collect();
            let den = vals.iter().fold(1i128, |acc, v| num_integer::lcm(acc, i128::try_from(v.denom().clone()).unwrap()));
            let ints: Vec<i128> = vals.iter().map(|v| i128::try_from((v * Rat::from(num_bigint::BigInt::from(den))).numer().clone()).unwrap()).collect();
            let red = crate::lattice::reduce_row(&ints).unwrap();
            for k in &red.kernel {
                prop_assert!(lat.reduce(k).unwrap().is_some(), "kernel vector {:?} missing", k);
            }
        }
    }
}
