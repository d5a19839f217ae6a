//! Valuations on R[y; d/dx] given by z-sequences.
//!
//! z_0 = y and z_i = z_{i−1} − γ_i·x^{−r_i} with v(z_{i−1}) = r_i. The
//! sequence either stops at an irrational v(z_K), or continues by a rule whose
//! exponents increase to a limit r* ≤ 1.

use std::fmt;
use std::sync::Arc;

use serde_json::json;

use crate::error::{Error, Result};
use crate::puiseux::{OrePoly, PuiseuxSeries};
use crate::rat::Rat;
use crate::value::Value;

type Generator = dyn Fn(usize) -> Result<(Rat, Rat)> + Send + Sync;

/// Infinite continuation of a z-sequence; `gen(i)` is the i-th pair, 1-based.
#[derive(Clone)]
pub struct ZRule {
    name: String,
    limit: Rat,
    offset: usize,
    gen: Arc<Generator>,
}

impl fmt::Debug for ZRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ZRule")
            .field("name", &self.name)
            .field("limit", &self.limit)
            .field("offset", &self.offset)
            .finish()
    }
}

impl ZRule {
    pub fn from_fn(
        name: impl Into<String>,
        limit: Rat,
        gen: impl Fn(usize) -> Result<(Rat, Rat)> + Send + Sync + 'static,
    ) -> Self {
        ZRule { name: name.into(), limit, offset: 0, gen: Arc::new(gen) }
    }

    /// r_i = limit·(1 − 2^{−i}), γ_i = 1.
    pub fn dyadic(limit: Rat) -> Self {
        let l = limit.clone();
        let name = if limit.is_one() { "dyadic_to_one".to_string() } else { format!("dyadic({limit})") };
        ZRule::from_fn(name, limit, move |i| {
            let e = i64::try_from(i).map_err(|_| Error::DepthExceeded { limit: i })?;
            Ok((&l * (Rat::one() - Rat::from(2).pow(-e)), Rat::one()))
        })
    }

    pub fn dyadic_to_one() -> Self {
        ZRule::dyadic(Rat::one())
    }

    /// Builtin rules by name: `dyadic_to_one` or `dyadic(limit)`.
    pub fn parse(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "dyadic_to_one" {
            return Ok(ZRule::dyadic_to_one());
        }
        if let Some(inner) = s.strip_prefix("dyadic(").and_then(|r| r.strip_suffix(')')) {
            let limit: Rat = inner
                .trim()
                .parse()
                .map_err(|_| Error::Parse { message: format!("bad limit '{inner}'"), line: 1, column: 8 })?;
            return Ok(ZRule::dyadic(limit));
        }
        Err(Error::Parse { message: format!("unknown z rule '{s}'"), line: 1, column: 1 })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn limit(&self) -> &Rat {
        &self.limit
    }

    fn entry(&self, i: usize) -> Result<(Rat, Rat)> {
        (self.gen)(i + self.offset)
    }
}

#[derive(Clone, Debug)]
pub enum ZTail {
    /// v(z_K) for K = number of entries; irrational.
    Terminal(Value),
    Rule(ZRule),
}

#[derive(Clone, Debug)]
pub struct ZSequence {
    entries: Vec<(Rat, Rat)>,
    tail: ZTail,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Regime {
    Terminal,
    BelowOne,
    One,
}

/// Leading data of an element: its value and, for rational values, the
/// coefficient c with f ~ c·x^{−value}.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ZInitial {
    pub value: Value,
    pub coef: Option<Rat>,
}

impl ZSequence {
    pub fn new(entries: Vec<(Rat, Rat)>, tail: ZTail) -> Result<Self> {
        let seq = ZSequence { entries, tail };
        let mut prev: Option<Rat> = None;
        for (i, (r, g)) in seq.entries.iter().enumerate() {
            if g.is_zero() {
                return Err(Error::InvalidDescriptor(format!("γ_{} is zero", i + 1)));
            }
            if prev.as_ref().is_some_and(|p| r <= p) {
                return Err(Error::InvalidDescriptor(format!("r_{} does not increase", i + 1)));
            }
            if *r >= Rat::one() {
                return Err(Error::InvalidDescriptor(format!("r_{} = {r} is not below 1", i + 1)));
            }
            prev = Some(r.clone());
        }
        match &seq.tail {
            ZTail::Terminal(t) => {
                if t.is_rational() {
                    return Err(Error::InvalidDescriptor("terminal value must be irrational".into()));
                }
                if prev.is_some_and(|p| *t <= Value::rational(p)) || *t >= Value::int(1) {
                    return Err(Error::InvalidDescriptor(format!("terminal value {t} is out of range")));
                }
            }
            ZTail::Rule(rule) => {
                if *rule.limit() > Rat::one() {
                    return Err(Error::InvalidDescriptor("rule limit exceeds 1".into()));
                }
            }
        }
        Ok(seq)
    }

    pub fn with_rule(entries: Vec<(Rat, Rat)>, rule: ZRule) -> Result<Self> {
        Self::new(entries, ZTail::Rule(rule))
    }

    pub fn terminal(entries: Vec<(Rat, Rat)>, value: Value) -> Result<Self> {
        Self::new(entries, ZTail::Terminal(value))
    }

    pub fn entries(&self) -> &[(Rat, Rat)] {
        &self.entries
    }

    pub fn tail(&self) -> &ZTail {
        &self.tail
    }

    pub fn regime(&self) -> Regime {
        match &self.tail {
            ZTail::Terminal(_) => Regime::Terminal,
            ZTail::Rule(r) if r.limit().is_one() => Regime::One,
            ZTail::Rule(_) => Regime::BelowOne,
        }
    }

    /// (r_i, γ_i) for i ≥ 1.
    pub fn entry(&self, i: usize) -> Result<(Rat, Rat)> {
        assert!(i >= 1, "entries are 1-based");
        if let Some(e) = self.entries.get(i - 1) {
            return Ok(e.clone());
        }
        match &self.tail {
            ZTail::Rule(rule) => rule.entry(i),
            ZTail::Terminal(_) => Err(Error::DepthExceeded { limit: self.entries.len() }),
        }
    }

    /// v(z_k).
    pub fn z_value(&self, k: usize) -> Result<Value> {
        match &self.tail {
            ZTail::Terminal(t) if k == self.entries.len() => Ok(t.clone()),
            _ => Ok(Value::rational(self.entry(k + 1)?.0)),
        }
    }

    /// a_k = y − z_k = Σ_{i ≤ k} γ_i x^{−r_i}.
    pub fn a(&self, k: usize) -> Result<PuiseuxSeries> {
        let mut s = PuiseuxSeries::zero();
        for i in 1..=k {
            let (r, g) = self.entry(i)?;
            s.add_term(r, g);
        }
        Ok(s)
    }

    pub fn to_json(&self, scale: &Rat) -> serde_json::Value {
        let entries: Vec<_> = self
            .entries
            .iter()
            .map(|(r, g)| json!({"r": r.to_string(), "gamma": g.to_string()}))
            .collect();
        let tail = match &self.tail {
            ZTail::Terminal(v) => json!({"kind": "terminal", "value": v.to_json(scale)}),
            ZTail::Rule(r) => json!({"kind": "rule", "name": r.name(), "limit": r.limit().to_string(), "offset": r.offset}),
        };
        json!({"entries": entries, "tail": tail})
    }
}

/// Unique minimum of v(p_i) + i·w, with the index attaining it.
fn unique_min(g: &OrePoly, w: &Value) -> Result<Option<(Value, usize)>> {
    let mut best: Option<(Value, usize)> = None;
    let mut tie = false;
    for (i, p) in g.coeffs().iter().enumerate() {
        if p.is_zero() {
            continue;
        }
        let cand = &p.value()? + &w.scale(i as i64);
        match &best {
            Some((b, _)) if cand > *b => {}
            Some((b, _)) if cand == *b => tie = true,
            _ => {
                best = Some((cand, i));
                tie = false;
            }
        }
    }
    Ok(if tie { None } else { best })
}

fn initial_at(g: &OrePoly, value: Value, i: usize, gamma: Option<&Rat>) -> ZInitial {
    let coef = value.as_rational().map(|_| {
        let lc = g.coeffs()[i].leading().expect("nonzero").1.clone();
        match gamma {
            Some(gm) => lc * gm.pow(i as i64),
            None => lc,
        }
    });
    ZInitial { value, coef }
}

/// Leading value and coefficient of f under the z-sequence valuation.
pub fn z_initial(seq: &ZSequence, f: &OrePoly, depth: usize) -> Result<ZInitial> {
    if f.is_zero() {
        return Ok(ZInitial { value: Value::Infinity, coef: None });
    }
    match seq.regime() {
        Regime::Terminal => {
            let k = seq.entries.len();
            let g = f.shift(&seq.a(k)?)?;
            let t = seq.z_value(k)?;
            let (v, i) = unique_min(&g, &t)?.ok_or_else(|| Error::Internal("tie at an irrational value".into()))?;
            Ok(initial_at(&g, v, i, None))
        }
        Regime::One => {
            let mut g = f.clone();
            for k in 0..=depth {
                if k > 0 {
                    let (r, gm) = seq.entry(k)?;
                    g = g.shift(&PuiseuxSeries::monomial(gm, r))?;
                }
                let (r_next, g_next) = seq.entry(k + 1)?;
                if let Some((v, i)) = unique_min(&g, &Value::rational(r_next))? {
                    return Ok(initial_at(&g, v, i, Some(&g_next)));
                }
            }
            Err(Error::DepthExceeded { limit: depth })
        }
        Regime::BelowOne => {
            let ZTail::Rule(rule) = &seq.tail else { unreachable!() };
            let two_limit = rule.limit() * Rat::from(2);
            let mut ell = 0;
            while Rat::one() + seq.entry(ell + 1)?.0 <= two_limit {
                ell += 1;
                if ell > depth {
                    return Err(Error::DepthExceeded { limit: depth });
                }
            }
            let mut g = f.shift(&seq.a(ell)?)?;
            for n in ell..=depth.max(ell) {
                if n > ell {
                    let (r, gm) = seq.entry(n)?;
                    g = g.commutative_shift(&PuiseuxSeries::monomial(gm, r));
                }
                let (r_next, g_next) = seq.entry(n + 1)?;
                if let Some((v, i)) = unique_min(&g, &Value::rational(r_next))? {
                    return Ok(initial_at(&g, v, i, Some(&g_next)));
                }
            }
            Err(Error::DepthExceeded { limit: depth })
        }
    }
}

pub fn z_eval(seq: &ZSequence, f: &OrePoly, depth: usize) -> Result<Value> {
    Ok(z_initial(seq, f, depth)?.value)
}

pub fn z_residue(seq: &ZSequence, f: &OrePoly, depth: usize) -> Result<Rat> {
    let init = z_initial(seq, f, depth)?;
    if !init.value.is_zero() {
        return Err(Error::NonzeroValue { value: init.value.to_string() });
    }
    init.coef.ok_or_else(|| Error::Internal("rational value without coefficient".into()))
}

/// Commutative rewrite in powers of z_k followed by the min rule, with no
/// regard for the order of factors.
pub fn naive_commutative_eval(seq: &ZSequence, f: &OrePoly, k: usize) -> Result<Value> {
    if f.is_zero() {
        return Ok(Value::Infinity);
    }
    let g = f.commutative_shift(&seq.a(k)?);
    let w = seq.z_value(k)?;
    let mut best = Value::Infinity;
    for (i, p) in g.coeffs().iter().enumerate() {
        if !p.is_zero() {
            best = best.min(&p.value()? + &w.scale(i as i64));
        }
    }
    Ok(best)
}

/// A z-sequence re-based at z_ℓ.
#[derive(Clone, Debug)]
pub struct Translation {
    pub removed: Vec<(Rat, Rat)>,
    /// a_ℓ; an element f(y) becomes f(y + a_ℓ).
    pub shift: PuiseuxSeries,
    pub seq: ZSequence,
}

impl Translation {
    pub fn element(&self, f: &OrePoly) -> Result<OrePoly> {
        f.shift(&self.shift)
    }

    pub fn back(&self) -> ZSequence {
        let mut entries = self.removed.clone();
        entries.extend(self.seq.entries.iter().cloned());
        let tail = match &self.seq.tail {
            ZTail::Rule(r) => {
                let mut r = r.clone();
                r.offset -= self.removed.len();
                ZTail::Rule(r)
            }
            t => t.clone(),
        };
        ZSequence { entries, tail }
    }
}

/// The automorphism y ↦ z_ℓ of R[y; δ] and the sequence it induces.
pub fn translate_y(seq: &ZSequence, ell: usize) -> Result<Translation> {
    let removed: Vec<(Rat, Rat)> = (1..=ell).map(|i| seq.entry(i)).collect::<Result<_>>()?;
    let entries = seq.entries.iter().skip(ell).cloned().collect();
    let tail = match &seq.tail {
        ZTail::Terminal(v) => ZTail::Terminal(v.clone()),
        ZTail::Rule(r) => {
            let mut r = r.clone();
            r.offset += ell;
            ZTail::Rule(r)
        }
    };
    Ok(Translation { shift: seq.a(ell)?, removed, seq: ZSequence { entries, tail } })
}

/// v(z) for z = y − Σ_{all i} γ_i x^{−r_i}: the limit minus a positive infinitesimal.
pub fn tilde_z_value(seq: &ZSequence) -> Value {
    match &seq.tail {
        ZTail::Terminal(t) => t.clone(),
        ZTail::Rule(r) => Value::new(r.limit().clone(), Rat::zero(), 1),
    }
}

/// Min rule over powers of z with coefficients in R̃.
pub fn tilde_eval(seq: &ZSequence, f_in_z: &OrePoly) -> Result<Value> {
    let w = tilde_z_value(seq);
    let mut best = Value::Infinity;
    for (i, p) in f_in_z.coeffs().iter().enumerate() {
        if !p.is_zero() {
            best = best.min(&p.value()? + &w.scale(i as i64));
        }
    }
    Ok(best)
}

/// f(y) rewritten over z with the series Σ γ_i x^{−r_i} cut after `n` terms
/// (the rest is only known to lie at or beyond x^{−r_{n+1}}).
pub fn rewrite_in_z(seq: &ZSequence, f: &OrePoly, n: usize) -> Result<OrePoly> {
    let a = match &seq.tail {
        ZTail::Terminal(_) => seq.a(seq.entries.len())?,
        ZTail::Rule(_) => seq.a(n)?.with_bound(seq.entry(n + 1)?.0),
    };
    f.shift(&a)
}

/// tilde_eval on an element of R[y; δ], lengthening the series until the
/// leading terms are known.
pub fn tilde_eval_y(seq: &ZSequence, f: &OrePoly, depth: usize) -> Result<Value> {
    let mut last = None;
    for n in 1..=depth.max(1) {
        match rewrite_in_z(seq, f, n).and_then(|g| tilde_eval(seq, &g)) {
            Ok(v) => return Ok(v),
            Err(e @ Error::TruncationLoss(_)) => last = Some(e),
            Err(e) => return Err(e),
        }
    }
    Err(last.unwrap_or(Error::DepthExceeded { limit: depth }))
}
