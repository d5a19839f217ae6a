//! Orderings compatible with a valuation.
//!
//! An ordering is fixed by the signs σ_p of x, y, ω_1, … . These satisfy one
//! parity equation for each value-zero relation: x^{m_i}·ω_{i−1}^{n_i} has
//! residue β_i and ω_{i−1}^{K_ij}·ω_{j−1}^{−K_ji} has residue α_ij. The solutions
//! are parametrised by the character on Γ/2Γ, whose basis is the key of
//! maximal 2-adic exponent together with the terminal key. The sign of F is
//! then sgn(c)·Π σ_p^{μ_p} for in(F) = c·in(ω^μ).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::descriptor::{GroupKind, OmegaDescriptor};
use crate::error::{Error, Result};
use crate::eval::{monomial_fraction, Evaluator};
use crate::extension::{check_extendable, free_index, resolve_gammas};
use crate::rat::Rat;
use crate::sample::random_element;
use crate::weyl::{WeylElement, WeylFraction};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Basis {
    /// ω index of the rational slot; −1 stands for x.
    pub omega_index: Option<i64>,
    pub terminal: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OrderingDescriptor {
    pub basis: Basis,
    /// Rational slot first, then the terminal slot.
    pub signs: Vec<i8>,
}

impl OrderingDescriptor {
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("plain data")
    }

    pub fn from_json(src: &str) -> Result<Self> {
        serde_json::from_str(src).map_err(|e| Error::Parse { message: e.to_string(), line: e.line(), column: e.column() })
    }

    fn slot_sign(&self) -> Option<i8> {
        self.basis.omega_index.map(|_| self.signs[0])
    }

    fn terminal_sign(&self) -> Option<i8> {
        if self.basis.terminal {
            self.signs.last().copied()
        } else {
            None
        }
    }
}

/// Pair index (0 = x) carrying the rational basis slot.
fn slot_index(desc: &OmegaDescriptor) -> Result<Option<usize>> {
    if desc.group_kind()? == GroupKind::TwoDivisible {
        return Ok(None);
    }
    Ok(Some(free_index(desc)?.unwrap_or(0)))
}

pub fn basis(desc: &OmegaDescriptor) -> Result<Basis> {
    Ok(Basis {
        omega_index: slot_index(desc)?.map(|p| p as i64 - 1),
        terminal: desc.terminal().is_some(),
    })
}

pub fn enumerate(desc: &OmegaDescriptor) -> Result<Vec<OrderingDescriptor>> {
    let b = basis(desc)?;
    let slots = usize::from(b.omega_index.is_some()) + usize::from(b.terminal);
    let mut out = Vec::new();
    for mask in 0..(1u32 << slots) {
        let signs = (0..slots).map(|s| if mask >> s & 1 == 1 { -1 } else { 1 }).collect();
        out.push(OrderingDescriptor { basis: b.clone(), signs });
    }
    Ok(out)
}

/// Parity system over GF(2) in the unknowns e_p with σ_p = (−1)^{e_p}.
struct Parity {
    rows: Vec<(Vec<bool>, bool)>,
    width: usize,
}

impl Parity {
    fn new(width: usize) -> Self {
        Parity { rows: Vec::new(), width }
    }

    fn push(&mut self, coeffs: &[(usize, i64)], rhs: bool) {
        let mut row = vec![false; self.width];
        for &(p, k) in coeffs {
            row[p] ^= k.rem_euclid(2) == 1;
        }
        self.rows.push((row, rhs));
    }

    /// A solution and a nullspace basis, or None when inconsistent.
    fn solve(mut self) -> Option<(Vec<bool>, Vec<Vec<bool>>)> {
        let w = self.width;
        let mut pivots = Vec::new();
        let mut r = 0;
        for c in 0..w {
            let Some(p) = (r..self.rows.len()).find(|&i| self.rows[i].0[c]) else { continue };
            self.rows.swap(r, p);
            let pivot = self.rows[r].clone();
            for (i, row) in self.rows.iter_mut().enumerate() {
                if i != r && row.0[c] {
                    for k in 0..w {
                        row.0[k] ^= pivot.0[k];
                    }
                    row.1 ^= pivot.1;
                }
            }
            pivots.push(c);
            r += 1;
        }
        if self.rows[r..].iter().any(|row| row.1) {
            return None;
        }
        let mut x = vec![false; w];
        for (i, &c) in pivots.iter().enumerate() {
            x[c] = self.rows[i].1;
        }
        let mut null = Vec::new();
        for f in (0..w).filter(|c| !pivots.contains(c)) {
            let mut v = vec![false; w];
            v[f] = true;
            for (i, &c) in pivots.iter().enumerate() {
                v[c] = self.rows[i].0[f];
            }
            null.push(v);
        }
        Some((x, null))
    }
}

/// σ_p for pair indices p < len, with the terminal key's sign appended when present.
pub fn generator_signs(desc: &OmegaDescriptor, ord: &OrderingDescriptor, len: usize) -> Result<Vec<i32>> {
    let finite = desc.finite_len();
    let top = match finite {
        Some(n) => n,
        None => len.max(desc.window()) + 3,
    };
    let width = top + 1;
    let mut sys = Parity::new(width);
    for i in 1..=top {
        let s = desc.step(i)?;
        sys.push(&[(0, s.m), (i, s.n)], s.beta.is_negative());
    }
    for i in 0..=top {
        for j in i + 1..=top {
            let (_, kij, kji) = desc.pair_data(i, j)?;
            sys.push(&[(i, kij), (j, kji)], desc.alpha(i, j)?.is_negative());
        }
    }
    if let Some(p) = slot_index(desc)? {
        let s = ord.slot_sign().ok_or_else(|| Error::Unsupported("ordering lacks the rational slot".into()))?;
        sys.push(&[(p, 1)], s < 0);
    }
    let (x, null) = sys.solve().ok_or_else(|| Error::ResidueInconsistent("no signs satisfy the relations".into()))?;
    let used = len.min(width);
    if null.iter().any(|v| v[..used].iter().any(|&b| b)) {
        return Err(Error::Internal("generator signs are not determined by the character".into()));
    }
    let mut out: Vec<i32> = x[..used].iter().map(|&b| if b { -1 } else { 1 }).collect();
    if let Some(t) = ord.terminal_sign() {
        let n = finite.expect("terminal descriptors are finite");
        out.resize(n + 1, 1);
        out.push(i32::from(t));
    }
    Ok(out)
}

fn signed_product(sigma: &[i32], mu: &[i64]) -> Result<i32> {
    let mut s = 1;
    for (p, &e) in mu.iter().enumerate() {
        if e.rem_euclid(2) == 1 {
            s *= sigma.get(p).copied().ok_or_else(|| Error::DepthExceeded { limit: sigma.len() })?;
        }
    }
    Ok(s)
}

fn sigma_for(desc: &OmegaDescriptor, ord: &OrderingDescriptor, mu: &[i64]) -> Result<Vec<i32>> {
    let len = match desc.finite_len() {
        Some(n) => n + 1,
        None => mu.len(),
    };
    generator_signs(desc, ord, len)
}

pub fn sign_with(ev: &Evaluator, ord: &OrderingDescriptor, f: &WeylElement) -> Result<i32> {
    let init = ev.initial(f)?.ok_or(Error::NonzeroRequired)?;
    let sigma = sigma_for(ev.descriptor(), ord, &init.mu)?;
    Ok(init.coef.signum() * signed_product(&sigma, &init.mu)?)
}

pub fn sign(desc: &OmegaDescriptor, ord: &OrderingDescriptor, f: &WeylElement, depth: usize) -> Result<i32> {
    sign_with(&Evaluator::new(desc, depth)?, ord, f)
}

pub fn sign_fraction(desc: &OmegaDescriptor, ord: &OrderingDescriptor, f: &WeylFraction, depth: usize) -> Result<i32> {
    let ev = Evaluator::new(desc, depth)?;
    Ok(sign_with(&ev, ord, &f.num)? * sign_with(&ev, ord, &f.den)?)
}

/// Sign read through a given representation v(F) = v(ω^mu): sgn res(F·ω^{−mu})·Π σ^mu.
pub fn sign_via(ev: &Evaluator, ord: &OrderingDescriptor, f: &WeylElement, mu: &[i64]) -> Result<i32> {
    let w = monomial_fraction(ev, mu)?;
    let q = WeylFraction::new(f.times(&w.den), w.num);
    let r = ev.residue_fraction(&q)?;
    let sigma = sigma_for(ev.descriptor(), ord, mu)?;
    Ok(r.signum() * signed_product(&sigma, mu)?)
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct CompatibilityReport {
    pub checked: usize,
    pub violations: Vec<String>,
}

/// Random checks of the ordering axioms: equivalent elements share a sign,
/// signs multiply, and a dominant summand decides the sign.
pub fn compatibility_check(
    desc: &OmegaDescriptor,
    ord: &OrderingDescriptor,
    seed: u64,
    trials: usize,
    depth: usize,
) -> Result<CompatibilityReport> {
    let ev = Evaluator::new(desc, depth)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rep = CompatibilityReport::default();
    let p = crate::parse::print;
    while rep.checked < trials {
        let f = random_element(&mut rng, 2, 4, 3);
        let g = random_element(&mut rng, 2, 4, 3);
        if f.is_zero() || g.is_zero() {
            continue;
        }
        let (vf, vg) = (ev.eval(&f)?, ev.eval(&g)?);
        let (sf, sg) = (sign_with(&ev, ord, &f)?, sign_with(&ev, ord, &g)?);
        if sign_with(&ev, ord, &f.times(&g))? != sf * sg {
            rep.violations.push(format!("sign({}·{}) is not multiplicative", p(&f), p(&g)));
        }
        let (lo, slo, hi) = if vf < vg { (&f, sf, &g) } else { (&g, sg, &f) };
        if vf != vg && sign_with(&ev, ord, &(lo + hi))? != slo {
            rep.violations.push(format!("{} does not decide the sign of the sum with {}", p(lo), p(hi)));
        }
        // a ~ a + h when v(h) > v(a)
        let bump = &WeylElement::x().pow(rng.gen_range(0..3u32)).times(&f) + &f.times(&WeylElement::x().pow(2));
        let h = ev.eval(&bump)?;
        if !h.is_infinite() && h > vf && sign_with(&ev, ord, &(&f + &bump))? != sf {
            rep.violations.push(format!("{} and a perturbation of it differ in sign", p(&f)));
        }
        let sq = f.times(&f);
        if sign_with(&ev, ord, &sq)? != 1 {
            rep.violations.push(format!("square of {} is not positive", p(&f)));
        }
        rep.checked += 1;
    }
    if sign_with(&ev, ord, &WeylElement::constant(Rat::from(-1)))? != -1 {
        rep.violations.push("−1 is not negative".into());
    }
    Ok(rep)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ExtendedOrdering {
    pub sign_choice: Option<i8>,
    pub ordering: OrderingDescriptor,
}

/// The extension of γ̃ and of the ordering to R[y; d/dx], which needs x^{m/n} > 0
/// and sgn ω_{i−1} = sgn γ̃_i.
pub fn extend_ordering(desc: &OmegaDescriptor, ord: &OrderingDescriptor) -> Result<ExtendedOrdering> {
    check_extendable(desc)?;
    let len = desc.finite_len().unwrap_or_else(|| desc.window()) + 1;
    let sigma = generator_signs(desc, ord, len)?;
    if sigma[0] < 0 {
        return Err(Error::NotExtendable("x is negative, but it is a square in the extension".into()));
    }
    let free = free_index(desc)?;
    let choice = free.map(|p| sigma[p] as i8);
    let g = resolve_gammas(desc, choice)?;
    for (i, gi) in g.gammas.iter().enumerate() {
        if gi.signum() != sigma[i + 1] {
            return Err(Error::NotExtendable(format!("sgn γ̃_{} disagrees with the sign of ω_{}", i + 1, i)));
        }
    }
    let terminal = ord.terminal_sign();
    Ok(ExtendedOrdering {
        sign_choice: choice,
        ordering: OrderingDescriptor {
            basis: Basis { omega_index: None, terminal: terminal.is_some() },
            signs: terminal.into_iter().collect(),
        },
    })
}

/// Each ordering with its extension or the reason it has none.
pub fn extension_table(desc: &OmegaDescriptor) -> Result<Vec<(OrderingDescriptor, Result<ExtendedOrdering>)>> {
    Ok(enumerate(desc)?.into_iter().map(|o| {
        let e = extend_ordering(desc, &o);
        (o, e)
    }).collect())
}
