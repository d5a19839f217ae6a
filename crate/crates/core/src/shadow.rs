//! Commutative oracle for the evaluator.
//!
//! The normal form Σ α_ij x^i y^j is read as a commutative polynomial and
//! evaluated through a Puiseux root approximation: the descriptor's Ω_i are
//! substituted at Y = s + Z, and the exponent and coefficient of each new
//! term of s are read off from the lowest terms of the coefficients in Z.
//! Nothing here shares code with the key-chain evaluator.

use std::collections::BTreeMap;

use crate::descriptor::OmegaDescriptor;
use crate::error::{Error, Result};
use crate::rat::Rat;
use crate::value::Value;
use crate::weyl::WeylElement;

/// Σ c·x^{−q}, keyed by q.
type Puis = BTreeMap<Rat, Rat>;

/// Polynomial in Z with Puiseux coefficients.
#[derive(Clone, Debug, Default)]
struct ZPoly(Vec<Puis>);

fn puis_add_into(acc: &mut Puis, q: Rat, c: Rat) {
    use std::collections::btree_map::Entry;
    match acc.entry(q) {
        Entry::Vacant(e) => {
            if !c.is_zero() {
                e.insert(c);
            }
        }
        Entry::Occupied(mut e) => {
            *e.get_mut() += c;
            if e.get().is_zero() {
                e.remove();
            }
        }
    }
}

fn puis_val(p: &Puis) -> Option<(&Rat, &Rat)> {
    p.iter().next()
}

impl ZPoly {
    fn constant_series(p: Puis) -> ZPoly {
        ZPoly(vec![p])
    }

    fn trim(mut self) -> ZPoly {
        while self.0.last().is_some_and(|p| p.is_empty()) {
            self.0.pop();
        }
        self
    }

    fn add(&self, o: &ZPoly) -> ZPoly {
        let n = self.0.len().max(o.0.len());
        let mut out = vec![Puis::new(); n];
        for (l, p) in self.0.iter().enumerate().chain(o.0.iter().enumerate()) {
            for (q, c) in p {
                puis_add_into(&mut out[l], q.clone(), c.clone());
            }
        }
        ZPoly(out).trim()
    }

    fn mul(&self, o: &ZPoly) -> ZPoly {
        if self.0.is_empty() || o.0.is_empty() {
            return ZPoly::default();
        }
        let mut out = vec![Puis::new(); self.0.len() + o.0.len() - 1];
        for (l1, p1) in self.0.iter().enumerate() {
            for (l2, p2) in o.0.iter().enumerate() {
                for (q1, c1) in p1 {
                    for (q2, c2) in p2 {
                        puis_add_into(&mut out[l1 + l2], q1 + q2, c1 * c2);
                    }
                }
            }
        }
        ZPoly(out).trim()
    }

    fn pow(&self, mut n: u32) -> ZPoly {
        let mut base = self.clone();
        let mut acc = ZPoly::constant_series(Puis::from([(Rat::zero(), Rat::one())]));
        while n > 0 {
            if n & 1 == 1 {
                acc = acc.mul(&base);
            }
            n >>= 1;
            if n > 0 {
                base = base.mul(&base);
            }
        }
        acc
    }

    /// Multiply by x^m.
    fn shift(&self, m: i64) -> ZPoly {
        let d = Rat::from(m);
        ZPoly(self.0.iter().map(|p| p.iter().map(|(q, c)| (q - &d, c.clone())).collect()).collect())
    }

    fn coeff(&self, l: usize) -> Option<&Puis> {
        self.0.get(l).filter(|p| !p.is_empty())
    }
}

fn rat_value(q: &Rat) -> Value {
    Value::rational(q.clone())
}

/// Outcome of one expansion step, labelled by the comparison of v(Ω_k) with
/// the value of its Z-free part C.
#[derive(Clone, Debug, PartialEq)]
pub(crate) enum Step {
    /// v(Ω_k) < v(C): a new term from γ̃_{k+1}.
    Below { k: usize, r: Rat, gamma: Rat },
    /// v(Ω_k) > v(C): a new term cancelling C.
    Above { k: usize, r: Rat, gamma: Rat },
    /// Equal values and residues: Ω_k is explained, move to k + 1.
    Explained { k: usize },
    /// Equal values, different residues: a new term from the residue gap.
    Gap { k: usize, r: Rat, gamma: Rat },
    /// The root approximation ends with an irrational exponent.
    Terminal { k: usize, value: Value },
}

pub(crate) struct RootExpansion<'a> {
    desc: &'a OmegaDescriptor,
    tildes: Vec<Rat>,
    fixed: bool,
    /// Terms γ·x^{−r} of the root approximation s.
    s: Vec<(Rat, Rat)>,
    terminal: Option<Value>,
    next: usize,
    depth: usize,
    work: usize,
}

/// γ̃_i with γ̃_i^{n_i} = β_i, signs matched to the α data.
fn tilde_gammas(desc: &OmegaDescriptor, upto: usize) -> Result<Vec<Rat>> {
    let mut out = vec![Rat::one()];
    for i in 1..=upto {
        let s = desc.step(i)?;
        let n = u32::try_from(s.n).map_err(|_| Error::Unsupported("step degree too large".into()))?;
        if n % 2 == 0 && s.beta.is_negative() {
            return Err(Error::Unsupported(format!("β_{i} has no real root of even degree")));
        }
        let mag = s.beta.abs().nth_root(n).map_err(|_| Error::Unsupported(format!("β_{i} has no rational root")))?;
        let mut sign = if n % 2 == 1 { s.beta.signum() } else { 0 };
        if sign == 0 {
            for j in 0..i {
                let (_, kij, kji) = desc.pair_data(i, j)?;
                if kij % 2 != 0 {
                    let a = desc.alpha(i, j)?.signum();
                    let other = if kji % 2 == 0 { 1 } else { out[j].signum() };
                    sign = a * other;
                    break;
                }
            }
            if sign == 0 {
                sign = 1;
            }
        }
        out.push(if sign < 0 { -mag } else { mag });
    }
    for i in 1..=upto {
        for j in 0..i {
            let (_, kij, kji) = desc.pair_data(i, j)?;
            let lhs = out[i].pow(kij) * out[j].pow(-kji);
            if lhs != desc.alpha(i, j)? {
                return Err(Error::Unsupported(format!("no real root choice matches α_{i},{j}")));
            }
        }
    }
    Ok(out)
}

impl<'a> RootExpansion<'a> {
    pub(crate) fn new(desc: &'a OmegaDescriptor, depth: usize) -> Self {
        RootExpansion { desc, tildes: Vec::new(), fixed: false, s: Vec::new(), terminal: None, next: 0, depth, work: 0 }
    }

    /// `tildes[0]` is the x slot and is ignored.
    pub(crate) fn with_tildes(desc: &'a OmegaDescriptor, tildes: Vec<Rat>, depth: usize) -> Self {
        RootExpansion { desc, tildes, fixed: true, s: Vec::new(), terminal: None, next: 0, depth, work: 0 }
    }




    fn tilde(&mut self, i: usize) -> Result<Rat> {
        if self.tildes.len() <= i && self.fixed {
            return Err(Error::Unsupported(format!("no γ̃_{i} supplied")));
        }
        if self.tildes.len() <= i {
            self.tildes = tilde_gammas(self.desc, i)?;
        }
        Ok(self.tildes[i].clone())
    }

    fn s_plus_z(&self) -> ZPoly {
        let mut p0 = Puis::new();
        for (r, g) in &self.s {
            puis_add_into(&mut p0, r.clone(), g.clone());
        }
        ZPoly(vec![p0, Puis::from([(Rat::zero(), Rat::one())])]).trim()
    }

    fn omega_sub(&self, i: usize) -> Result<ZPoly> {
        let mut w = self.s_plus_z();
        for k in 1..=i {
            let st = self.desc.step(k)?;
            let n = u32::try_from(st.n).map_err(|_| Error::Unsupported("step degree too large".into()))?;
            let minus_beta = ZPoly::constant_series(Puis::from([(Rat::zero(), -st.beta.clone())]));
            w = w.pow(n).shift(st.m).add(&minus_beta);
        }
        Ok(w)
    }

    fn r_last(&self) -> Option<&Rat> {
        self.s.last().map(|(r, _)| r)
    }

    fn push(&mut self, r: Rat, g: Rat) -> Result<()> {
        if self.r_last().is_some_and(|last| &r <= last) {
            return Err(Error::Internal("root exponents must increase".into()));
        }
        self.s.push((r, g));
        Ok(())
    }

    /// One unit of progress on Ω_next: a new term of s, an explained Ω, or the terminal value.
    pub(crate) fn step(&mut self) -> Result<Step> {
        self.work += 1;
        if self.work > self.depth.max(1) * 4 || self.next > self.depth {
            return Err(Error::DepthExceeded { limit: self.depth });
        }
        let i = self.next;
        let vi = self.desc.omega_value(i as i64)?;
        let p = self.omega_sub(i)?;
        let lead = |l: usize| p.coeff(l).and_then(puis_val).map(|(q, c)| (q.clone(), c.clone()));
        let a = lead(0);
        let av = a.as_ref().map_or(Value::Infinity, |(q, _)| rat_value(q));
        let higher: Vec<(usize, Rat, Rat)> = (1..p.0.len()).filter_map(|l| lead(l).map(|(q, c)| (l, q, c))).collect();
        if av > vi {
            let mut best: Option<(Value, usize)> = None;
            let mut tie = false;
            for (l, q, _) in &higher {
                let cand = (&vi - &rat_value(q)).scale_rat(&Rat::new(1, *l as i64));
                match &best {
                    Some((b, _)) if cand < *b => {}
                    Some((b, _)) if cand == *b => tie = true,
                    _ => {
                        best = Some((cand, *l));
                        tie = false;
                    }
                }
            }
            let (zeta, l) = best.ok_or_else(|| Error::Internal("Ω has no Z part".into()))?;
            if tie {
                return Err(Error::Unsupported("several powers of Z decide the next term".into()));
            }
            return match zeta.as_rational() {
                None => {
                    self.terminal = Some(zeta.clone());
                    self.next = usize::MAX;
                    Ok(Step::Terminal { k: i, value: zeta })
                }
                Some(r) => {
                    let lc = lead(l).expect("present").1;
                    let g = (self.tilde(i + 1)? / lc)
                        .nth_root(l as u32)
                        .map_err(|_| Error::Unsupported("root coefficient is not rational".into()))?;
                    self.push(r.clone(), g.clone())?;
                    Ok(Step::Below { k: i, r: r.clone(), gamma: g })
                }
            };
        }
        let (aq, ac) = a.expect("finite value");
        if av < vi {
            let mut best: Option<(Rat, usize)> = None;
            let mut tie = false;
            for (l, q, _) in &higher {
                let cand = (&aq - q) / Rat::from(*l as i64);
                match &best {
                    Some((b, _)) if cand < *b => {}
                    Some((b, _)) if cand == *b => tie = true,
                    _ => {
                        best = Some((cand, *l));
                        tie = false;
                    }
                }
            }
            let (zeta, l) = best.ok_or_else(|| Error::Internal("Ω cannot reach its value".into()))?;
            if tie {
                return Err(Error::Unsupported("several powers of Z decide the next term".into()));
            }
            let lc = lead(l).expect("present").1;
            let g = (-ac / lc)
                .nth_root(l as u32)
                .map_err(|_| Error::Unsupported("root coefficient is not rational".into()))?;
            self.push(zeta.clone(), g.clone())?;
            return Ok(Step::Above { k: i, r: zeta, gamma: g });
        }
        let t = self.tilde(i + 1)?;
        if ac == t {
            self.next += 1;
            return Ok(Step::Explained { k: i });
        }
        let (q1, c1) = lead(1).ok_or_else(|| Error::Unsupported("Ω has no linear Z part".into()))?;
        let zeta = aq - q1;
        let g = (t - ac) / c1;
        self.push(zeta.clone(), g.clone())?;
        Ok(Step::Gap { k: i, r: zeta, gamma: g })
    }

    fn substitute(&self, f: &WeylElement) -> ZPoly {
        let sz = self.s_plus_z();
        let mut powers = vec![ZPoly::constant_series(Puis::from([(Rat::zero(), Rat::one())]))];
        let mut out = ZPoly::default();
        for (&(i, j), c) in f.terms() {
            while powers.len() <= j as usize {
                let next = powers.last().expect("nonempty").mul(&sz);
                powers.push(next);
            }
            let scaled = ZPoly(
                powers[j as usize]
                    .0
                    .iter()
                    .map(|p| p.iter().map(|(q, d)| (q - Rat::from(i), d * c)).collect())
                    .collect(),
            );
            out = out.add(&scaled);
        }
        out
    }
}

/// v(F) from the commutative root approximation.
pub fn shadow_eval(desc: &OmegaDescriptor, f: &WeylElement, depth: usize) -> Result<Value> {
    if f.is_zero() {
        return Ok(Value::Infinity);
    }
    let mut sh = RootExpansion::new(desc, depth);
    sh.step()?;
    loop {
        let q = sh.substitute(f);
        let vals: Vec<Option<Rat>> = (0..q.0.len()).map(|l| q.coeff(l).and_then(puis_val).map(|(v, _)| v.clone())).collect();
        if let Some(zeta) = &sh.terminal {
            let best = vals
                .iter()
                .enumerate()
                .filter_map(|(l, v)| v.as_ref().map(|v| &rat_value(v) + &zeta.scale(l as i64)))
                .min()
                .expect("nonzero element");
            return Ok(best);
        }
        let r = sh.r_last().cloned().expect("at least one term");
        if let Some(v0) = &vals[0] {
            let clear = vals
                .iter()
                .enumerate()
                .skip(1)
                .all(|(l, v)| v.as_ref().map_or(true, |v| *v0 <= v + &r * Rat::from(l as i64)));
            if clear {
                return Ok(rat_value(v0));
            }
        }
        sh.step()?;
    }
}

#[derive(Clone, Debug, serde::Serialize)]
pub struct ShadowMismatch {
    pub element: String,
    pub eval: String,
    pub shadow: String,
}

#[derive(Clone, Debug, serde::Serialize)]
pub struct ShadowReport {
    pub trials: usize,
    pub skipped: usize,
    pub mismatches: Vec<ShadowMismatch>,
}

/// eval against shadow_eval on random elements. Elements the shadow cannot
/// decide (ties between powers of Z) are counted as skipped.
pub fn shadow_compare(desc: &OmegaDescriptor, seed: u64, trials: usize, depth: usize) -> Result<ShadowReport> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let ev = crate::eval::Evaluator::new(desc, depth)?;
    let mut rep = ShadowReport { trials, skipped: 0, mismatches: Vec::new() };
    for _ in 0..trials {
        let deg = rng.gen_range(1..=5);
        let f = crate::sample::random_element(&mut rng, 3, deg, 4);
        let a = ev.eval(&f)?;
        let b = match shadow_eval(desc, &f, depth) {
            Ok(b) => b,
            Err(Error::Unsupported(_)) => {
                rep.skipped += 1;
                continue;
            }
            Err(e) => return Err(e),
        };
        if a != b {
            rep.mismatches.push(ShadowMismatch {
                element: crate::parse::print(&f),
                eval: a.display(&desc.xi_scale),
                shadow: b.display(&desc.xi_scale),
            });
        }
    }
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::descriptor::{OmegaStep, Rule};
    use crate::parse::parse;

    fn q(s: &str) -> Value {
        Value::rational(s.parse().unwrap())
    }

    #[test]
    fn spot_values() {
        let w = OmegaDescriptor::worked_example();
        assert_eq!(shadow_eval(&w, &parse("y").unwrap(), 64).unwrap(), q("1/2"));
        assert_eq!(shadow_eval(&w, &parse("x^2*y^4 - 1").unwrap(), 64).unwrap(), q("1/4"));
        assert_eq!(shadow_eval(&w, &parse("x*y^2 - 1").unwrap(), 64).unwrap(), q("1/4"));
        assert_eq!(shadow_eval(&w, &WeylElement::zero(), 64).unwrap(), Value::Infinity);
    }

    #[test]
    fn ordering_corrections_decide_second_key() {
        // normal form of ω₂ read commutatively: the correction 2xy³ of ω₁² shifts the residue
        let w = OmegaDescriptor::worked_example();
        let w2 = w.omega_laurent(2).unwrap();
        let xi = Value::with_scale(Rat::zero(), 1, &Rat::new(1, 8), 0);
        assert_eq!(crate::eval::eval(&w, &w2, 64).unwrap(), xi);
        assert_eq!(shadow_eval(&w, &w2, 64).unwrap(), Value::zero());
    }

    #[test]
    fn root_terms_of_worked_example() {
        let w = OmegaDescriptor::worked_example();
        let mut sh = RootExpansion::new(&w, 64);
        while sh.terminal.is_none() {
            sh.step().unwrap();
        }
        assert_eq!(sh.s, vec![(Rat::new(1, 2), Rat::one()), (Rat::new(3, 4), Rat::new(1, 2))]);
        let expect = Value::with_scale(Rat::new(3, 4), 1, &Rat::new(1, 8), 0);
        assert_eq!(sh.terminal, Some(expect));
    }

    #[test]
    fn random_agreement() {
        let rep = shadow_compare(&OmegaDescriptor::worked_example(), 1, 60, 64).unwrap();
        assert!(rep.mismatches.is_empty(), "{:?}", rep.mismatches);
    }

    #[test]
    fn rule_and_odd_roots() {
        let c = OmegaDescriptor::with_rule(vec![], Rule::parse("constant(1,3,-1)").unwrap());
        assert_eq!(shadow_eval(&c, &parse("x*y^3 + 1").unwrap(), 64).unwrap(), q("1/9"));
        let h = OmegaDescriptor::halving();
        assert_eq!(shadow_eval(&h, &parse("x*y^2 - 1").unwrap(), 64).unwrap(), q("1/4"));
        let f = OmegaDescriptor::finite(vec![OmegaStep::new(1, 2, 4)]);
        assert!(matches!(shadow_eval(&f, &parse("x*y^2 - 4").unwrap(), 64), Err(Error::DepthExceeded { .. })));
    }
}
