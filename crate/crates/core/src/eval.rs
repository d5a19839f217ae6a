//! Evaluation of v(F) for Weyl elements.
//!
//! The valuation is approached through a chain of key elements
//! φ_0 = y, φ_{j+1} = φ_j^{ê_j} − c_j·N_j in A₁[x⁻¹], each monic in y.
//! An element is expanded as Σ c·x^a·y^b·φ_1^{e_1}⋯φ_k^{e_k} with reduced
//! exponents. Every such product has a known value and a known initial
//! form c·κ·in(ω^μ), so the minimum is the value unless the residues of the
//! minimal terms cancel, in which case the next key is brought in.
//!
//! Key values are read off the descriptor: the next unexplained ω_i is
//! expanded in powers of the new key, and comparing the value of its
//! constant part with v(ω_i) pins down v(φ_{j+1}) and its initial form.

use std::cmp::Ordering;
use std::sync::Mutex;

use num_integer::Integer;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::descriptor::OmegaDescriptor;
use crate::error::{Error, Result};
use crate::lattice::{reduce_row, ResidueLattice};
use crate::rat::Rat;
use crate::sample::random_element;
use crate::value::Value;
use crate::weyl::{WeylElement, WeylFraction};

pub const DEFAULT_DEPTH: usize = 64;

/// in(F) = coef·in(ω^mu), where mu indexes x, y, ω_1, ω_2, … in that order.
#[derive(Clone, Debug, PartialEq)]
pub struct Initial {
    pub value: Value,
    pub coef: Rat,
    pub mu: Vec<i64>,
}

#[derive(Clone, Debug)]
pub struct Key {
    pub phi: WeylElement,
    pub degree: u32,
    pub lambda: Value,
    /// None for a key of irrational value.
    pub ehat: Option<i64>,
    pub kappa: Rat,
    pub mu: Vec<i64>,
}

#[derive(Clone, Debug)]
struct Term {
    c: Rat,
    a: i64,
    /// exps[i] is the exponent of φ_i.
    exps: Vec<u32>,
}

fn unit(len: usize, at: usize) -> Vec<i64> {
    let mut v = vec![0; len.max(at + 1)];
    v[at] = 1;
    v
}

fn axpy(acc: &mut Vec<i64>, k: i64, v: &[i64]) {
    if acc.len() < v.len() {
        acc.resize(v.len(), 0);
    }
    for (a, b) in acc.iter_mut().zip(v) {
        *a += k * b;
    }
}

fn trim(mut v: Vec<i64>) -> Vec<i64> {
    while v.last() == Some(&0) {
        v.pop();
    }
    v
}

/// F = Q·φ + R with deg_y R < deg_y φ, for φ monic in y.
pub fn right_divmod(f: &WeylElement, phi: &WeylElement) -> (WeylElement, WeylElement) {
    let d = phi.y_degree().expect("division by zero");
    debug_assert_eq!(phi.y_coefficient(d).into_iter().collect::<Vec<_>>(), vec![(0, Rat::one())]);
    let mut rem = f.clone();
    let mut q = WeylElement::zero();
    while let Some(top) = rem.y_degree() {
        if top < d {
            break;
        }
        let t = WeylElement::from_terms(rem.y_coefficient(top).into_iter().map(|(a, c)| ((a, top - d), c)));
        rem = &rem - &t.times(phi);
        q = &q + &t;
    }
    (q, rem)
}

struct Chain {
    desc: OmegaDescriptor,
    depth: usize,
    keys: Vec<Key>,
    /// dens[j] is the common denominator of ℤ + λ_0ℤ + … + λ_jℤ.
    dens: Vec<i64>,
    next_omega: usize,
    omegas: Vec<WeylElement>,
    lattice: Option<(usize, ResidueLattice)>,
}

impl Chain {
    fn new(desc: &OmegaDescriptor, depth: usize) -> Result<Chain> {
        let lambda = desc.omega_value(0)?;
        let ehat = lambda.as_rational().map(|l| l.denom().try_into().unwrap_or(i64::MAX));
        let key = Key {
            phi: WeylElement::y(),
            degree: 1,
            lambda,
            ehat,
            kappa: Rat::one(),
            mu: unit(2, 1),
        };
        Ok(Chain {
            desc: desc.clone(),
            depth,
            dens: vec![ehat.unwrap_or(1)],
            keys: vec![key],
            next_omega: 1,
            omegas: vec![WeylElement::y()],
            lattice: None,
        })
    }

    fn terminal_coord(&self) -> Option<usize> {
        self.desc.terminal().map(|_| self.desc.steps.len() + 1)
    }

    fn omega(&mut self, i: usize) -> Result<WeylElement> {
        while self.omegas.len() <= i {
            let k = self.omegas.len();
            let s = self.desc.step(k)?;
            let n = u32::try_from(s.n).map_err(|_| Error::Unsupported("step degree too large".into()))?;
            let w = self.omegas[k - 1].pow(n).shift_x(s.m) - WeylElement::constant(s.beta);
            self.omegas.push(w);
        }
        Ok(self.omegas[i].clone())
    }

    fn mu_value(&self, mu: &[i64]) -> Result<Value> {
        let mut v = Value::zero();
        for (c, &k) in mu.iter().enumerate() {
            if k != 0 {
                v = &v + &self.desc.omega_value(c as i64 - 1)?.scale(k);
            }
        }
        Ok(v)
    }

    /// Residue of ω^mu for a value-zero exponent vector.
    fn res(&mut self, mu: &[i64]) -> Result<Rat> {
        let mu = trim(mu.to_vec());
        if mu.is_empty() {
            return Ok(Rat::one());
        }
        let p = mu.len() - 1;
        if Some(p) == self.terminal_coord() {
            return Err(Error::Internal("irrational generator in a value-zero monomial".into()));
        }
        let need = p.max(1);
        if self.lattice.as_ref().map_or(true, |(n, _)| *n < need) {
            let lat = self.desc.residue_lattice(need)?;
            self.lattice = Some((need, lat));
        }
        let (n, lat) = self.lattice.as_ref().expect("lattice built");
        let mut v: Vec<i128> = mu.iter().map(|&k| k as i128).collect();
        v.resize(n + 1, 0);
        lat.reduce(&v)?
            .ok_or_else(|| Error::Internal(format!("exponent vector {mu:?} has no residue")))
    }

    fn ensure_key(&mut self, k: usize) -> Result<()> {
        while self.keys.len() <= k {
            if self.keys.len() > self.depth {
                return Err(Error::DepthExceeded { limit: self.depth });
            }
            self.extend()?;
        }
        Ok(())
    }

    fn expand(&self, f: &WeylElement, k: usize) -> Vec<Term> {
        if k == 0 {
            return f
                .terms()
                .map(|(&(a, b), c)| Term {
                    c: c.clone(),
                    a,
                    exps: vec![b],
                })
                .collect();
        }
        let phi = &self.keys[k].phi;
        let mut out = Vec::new();
        let mut cur = f.clone();
        let mut l = 0u32;
        while !cur.is_zero() {
            let (q, r) = right_divmod(&cur, phi);
            for mut t in self.expand(&r, k - 1) {
                t.exps.push(l);
                out.push(t);
            }
            cur = q;
            l += 1;
        }
        out
    }

    fn term_value(&self, t: &Term) -> Value {
        let mut v = Value::int(-t.a);
        for (i, &e) in t.exps.iter().enumerate() {
            if e != 0 {
                v = &v + &self.keys[i].lambda.scale(e as i64);
            }
        }
        v
    }

    fn term_form(&self, t: &Term) -> (Rat, Vec<i64>) {
        let mut coef = t.c.clone();
        let mut mu = unit(2, 0);
        mu[0] = t.a;
        for (i, &e) in t.exps.iter().enumerate() {
            if e != 0 {
                coef *= self.keys[i].kappa.pow(e as i64);
                axpy(&mut mu, e as i64, &self.keys[i].mu);
            }
        }
        (coef, trim(mu))
    }

    /// Initial form of the expansion, or None when the minimal terms cancel.
    fn leading(&mut self, terms: &[Term]) -> Result<Option<Initial>> {
        let vals: Vec<Value> = terms.iter().map(|t| self.term_value(t)).collect();
        let min = vals.iter().min().cloned().expect("nonzero element");
        let mut group: Vec<&Term> = terms.iter().zip(&vals).filter(|(_, v)| **v == min).map(|(t, _)| t).collect();
        group.sort_by_key(|t| (t.a, t.exps[0]));
        let (_, mu_ref) = self.term_form(group[0]);
        let mut sum = Rat::zero();
        for t in group {
            let (coef, mu) = self.term_form(t);
            let mut diff = mu;
            axpy(&mut diff, -1, &mu_ref);
            sum += coef * self.res(&diff)?;
        }
        Ok(if sum.is_zero() {
            None
        } else {
            Some(Initial {
                value: min,
                coef: sum,
                mu: mu_ref,
            })
        })
    }

    fn initial(&mut self, f: &WeylElement, max_level: Option<usize>) -> Result<Initial> {
        let deg = f.y_degree().expect("nonzero element") as i64;
        let mut k = 0;
        loop {
            self.ensure_key(k)?;
            let terms = self.expand(f, k);
            if let Some(init) = self.leading(&terms)? {
                return Ok(init);
            }
            let key = &self.keys[k];
            match key.ehat {
                None => return Err(Error::Internal("cancellation at the irrational key".into())),
                Some(e) if key.degree as i64 * e > deg => {
                    return Err(Error::Internal(format!("cancellation below key {}", k + 1)))
                }
                _ => {}
            }
            k += 1;
            if max_level.is_some_and(|m| k > m) {
                return Err(Error::Internal("key value needs a higher key".into()));
            }
            if k > self.depth {
                return Err(Error::DepthExceeded { limit: self.depth });
            }
        }
    }

    /// x^a·φ_0^{e_0}⋯φ_{j−1}^{e_{j−1}} of value g with 0 ≤ e_i < ê_i.
    fn reduced_monomial(&self, g: &Rat, j: usize) -> Result<(i64, Vec<u32>)> {
        let mut g = g.clone();
        let mut exps = vec![0u32; j];
        for i in (0..j).rev() {
            let lam = self.keys[i].lambda.as_rational().expect("rational key below").clone();
            let below = if i == 0 { 1 } else { self.dens[i - 1] };
            let ehat = self.keys[i].ehat.expect("finite index below");
            let found = (0..ehat).find(|&e| ((&g - &lam * Rat::from(e)) * Rat::from(below)).is_integer());
            let e = found.ok_or_else(|| Error::Internal("value outside the key group".into()))?;
            g -= &lam * Rat::from(e);
            exps[i] = e as u32;
        }
        let a = (-g).to_i64().ok_or_else(|| Error::Internal("non-integral x exponent".into()))?;
        Ok((a, exps))
    }

    fn monomial_element(&self, a: i64, exps: &[u32]) -> WeylElement {
        let mut m = WeylElement::monomial(Rat::one(), a, 0);
        for (i, &e) in exps.iter().enumerate() {
            if e != 0 {
                m = m.times(&self.keys[i].phi.pow(e));
            }
        }
        m
    }

    fn extend(&mut self) -> Result<()> {
        let j = self.keys.len() - 1;
        let key = self.keys[j].clone();
        let ehat = key.ehat.ok_or_else(|| Error::Internal("irrational key has no successor".into()))?;
        let lam = key.lambda.as_rational().expect("finite index implies rational").clone();
        let (a, exps) = self.reduced_monomial(&(&lam * Rat::from(ehat)), j)?;
        let n_elem = self.monomial_element(a, &exps);
        let n_term = Term {
            c: Rat::one(),
            a,
            exps: exps.clone(),
        };
        let (kn, mu_n) = self.term_form(&n_term);
        let mut diff = Vec::new();
        axpy(&mut diff, ehat, &key.mu);
        axpy(&mut diff, -1, &mu_n);
        let c = key.kappa.pow(ehat) / kn * self.res(&diff)?;
        let e32 = u32::try_from(ehat).map_err(|_| Error::Unsupported("key index too large".into()))?;
        let phi = key.phi.pow(e32) - n_elem.scale(&c);
        let degree = key.degree * e32;

        loop {
            let i = self.next_omega;
            if i > self.depth {
                return Err(Error::DepthExceeded { limit: self.depth });
            }
            let v = self.desc.omega_value(i as i64)?;
            let w = self.omega(i)?;
            let mut parts = Vec::new();
            let mut cur = w;
            while !cur.is_zero() {
                let (q, r) = right_divmod(&cur, &phi);
                parts.push(r);
                cur = q;
            }
            let mut inits = Vec::new();
            for p in &parts {
                inits.push(if p.is_zero() { None } else { Some(self.initial(p, Some(j))?) });
            }
            let b0 = inits[0].as_ref().map_or(Value::Infinity, |x| x.value.clone());
            let e_omega = unit(i + 2, i + 1);
            let factor = match b0.cmp(&v) {
                Ordering::Less => {
                    return Err(Error::Internal(format!("constant part of ω_{i} has smaller value")))
                }
                Ordering::Greater => Rat::one(),
                Ordering::Equal => {
                    let a0 = inits[0].as_ref().expect("finite value");
                    let mut d = a0.mu.clone();
                    axpy(&mut d, -1, &e_omega);
                    let rho = &a0.coef * self.res(&d)?;
                    if rho.is_one() {
                        self.next_omega += 1;
                        continue;
                    }
                    Rat::one() - rho
                }
            };
            let a1 = inits
                .get(1)
                .and_then(|x| x.as_ref())
                .ok_or_else(|| Error::Unsupported(format!("ω_{i} has no linear part in key {}", j + 1)))?;
            let lambda = &v - &a1.value;
            for (l, init) in inits.iter().enumerate().skip(2) {
                if let Some(init) = init {
                    if &init.value + &lambda.scale(l as i64) <= v {
                        return Err(Error::Unsupported(format!("key {} value is not fixed by ω_{i}", j + 1)));
                    }
                }
            }
            let kappa = factor / &a1.coef;
            let mut mu = e_omega;
            axpy(&mut mu, -1, &a1.mu);
            let den = self.dens[j];
            let ehat = lambda.as_rational().map(|l| {
                let q: i64 = l.denom().try_into().unwrap_or(i64::MAX);
                q / q.gcd(&den)
            });
            self.dens.push(den * ehat.unwrap_or(1));
            self.keys.push(Key {
                phi,
                degree,
                lambda,
                ehat,
                kappa,
                mu: trim(mu),
            });
            self.next_omega = i + 1;
            return Ok(());
        }
    }
}

/// Caches the key chain of one descriptor; safe to share between threads.
pub struct Evaluator {
    desc: OmegaDescriptor,
    chain: Mutex<Chain>,
}

impl Evaluator {
    pub fn new(desc: &OmegaDescriptor, depth: usize) -> Result<Evaluator> {
        Ok(Evaluator {
            desc: desc.clone(),
            chain: Mutex::new(Chain::new(desc, depth)?),
        })
    }

    pub fn descriptor(&self) -> &OmegaDescriptor {
        &self.desc
    }

    fn with<T>(&self, f: impl FnOnce(&mut Chain) -> Result<T>) -> Result<T> {
        let mut g = self.chain.lock().unwrap_or_else(|e| e.into_inner());
        f(&mut g)
    }

    /// None for F = 0.
    pub fn initial(&self, f: &WeylElement) -> Result<Option<Initial>> {
        if f.is_zero() {
            return Ok(None);
        }
        self.with(|c| c.initial(f, None).map(Some))
    }

    pub fn eval(&self, f: &WeylElement) -> Result<Value> {
        Ok(self.initial(f)?.map_or(Value::Infinity, |i| i.value))
    }

    pub fn residue(&self, f: &WeylElement) -> Result<Rat> {
        match self.initial(f)? {
            Some(init) if init.value.is_zero() => {
                let r = self.residue_of_exponents(&init.mu)?;
                Ok(init.coef * r)
            }
            Some(init) => Err(Error::NonzeroValue {
                value: init.value.display(&self.desc.xi_scale),
            }),
            None => Err(Error::NonzeroValue {
                value: "infinity".into(),
            }),
        }
    }

    pub fn eval_fraction(&self, f: &WeylFraction) -> Result<Value> {
        let d = self.eval(&f.den)?;
        if d.is_infinite() {
            return Err(Error::NonzeroRequired);
        }
        Ok(&self.eval(&f.num)? - &d)
    }

    pub fn residue_fraction(&self, f: &WeylFraction) -> Result<Rat> {
        let v = self.eval_fraction(f)?;
        if !v.is_zero() {
            return Err(Error::NonzeroValue {
                value: v.display(&self.desc.xi_scale),
            });
        }
        let n = self.initial(&f.num)?.expect("finite value");
        let d = self.initial(&f.den)?.expect("finite value");
        let mut mu = n.mu.clone();
        axpy(&mut mu, -1, &d.mu);
        Ok(n.coef / d.coef * self.residue_of_exponents(&mu)?)
    }

    /// v(ω^mu) for an exponent vector over x, y, ω_1, ….
    pub fn exponents_value(&self, mu: &[i64]) -> Result<Value> {
        self.with(|c| c.mu_value(mu))
    }

    /// Residue of ω^mu, which must have value zero.
    pub fn residue_of_exponents(&self, mu: &[i64]) -> Result<Rat> {
        let v = self.exponents_value(mu)?;
        if !v.is_zero() {
            return Err(Error::NonzeroValue {
                value: v.display(&self.desc.xi_scale),
            });
        }
        self.with(|c| c.res(mu))
    }

    /// ω_i with signed x-exponents, from the cache.
    pub fn omega(&self, i: usize) -> Result<WeylElement> {
        self.with(|c| c.omega(i))
    }

    /// Keys built so far, after making sure `n` exist.
    pub fn keys(&self, n: usize) -> Result<Vec<Key>> {
        self.with(|c| {
            c.ensure_key(n.saturating_sub(1))?;
            Ok(c.keys.clone())
        })
    }
}

pub fn eval(desc: &OmegaDescriptor, f: &WeylElement, depth: usize) -> Result<Value> {
    Evaluator::new(desc, depth)?.eval(f)
}

pub fn residue(desc: &OmegaDescriptor, f: &WeylElement, depth: usize) -> Result<Rat> {
    Evaluator::new(desc, depth)?.residue(f)
}

/// The element ω^k with signed exponents as a fraction P·Q⁻¹.
pub fn monomial_fraction(ev: &Evaluator, k: &[i64]) -> Result<WeylFraction> {
    let mut num = WeylElement::monomial(Rat::one(), k.first().copied().unwrap_or(0), 0);
    let mut den = WeylElement::one();
    for (c, &e) in k.iter().enumerate().skip(1) {
        if e == 0 {
            continue;
        }
        let w = ev.omega(c - 1)?.pow(e.unsigned_abs() as u32);
        if e > 0 {
            num = num.times(&w);
        } else {
            den = w.times(&den);
        }
    }
    Ok(WeylFraction::new(num, den))
}

/// v(W − res W) for a value-zero monomial W = ω^k.
pub fn monomial_gap_value(ev: &Evaluator, k: &[i64]) -> Result<Value> {
    let rho = ev.residue_of_exponents(k)?;
    let w = monomial_fraction(ev, k)?;
    let gap = &w.num - &w.den.scale(&rho);
    Ok(&ev.eval(&gap)? - &ev.eval(&w.den)?)
}

/// Generators of the value-zero monomials over x, y, ω_1, …, ω_{r−1}.
pub fn unit_generators(desc: &OmegaDescriptor, r: usize) -> Result<Vec<Vec<i64>>> {
    if r == 0 {
        return Ok(Vec::new());
    }
    let mut out: Vec<Vec<i64>> = Vec::new();
    for i in 1..=r {
        let s = desc.step(i)?;
        let mut v = vec![0i64; r + 1];
        v[0] += s.m;
        v[i] += s.n;
        out.push(v);
    }
    let vals: Vec<Rat> = (0..=r)
        .map(|c| {
            desc.omega_value(c as i64 - 1)?
                .as_rational()
                .cloned()
                .ok_or_else(|| Error::Unsupported("unit generators need rational values".into()))
        })
        .collect::<Result<_>>()?;
    let den = vals
        .iter()
        .fold(num_bigint::BigInt::from(1), |acc, v| acc.lcm(v.denom()));
    let ints: Vec<i128> = vals
        .iter()
        .map(|v| i128::try_from((v * Rat::from(den.clone())).numer().clone()).map_err(|_| Error::Unsupported("values too large".into())))
        .collect::<Result<_>>()?;
    let mut lat = ResidueLattice::new(r + 1);
    for v in &out {
        lat.insert(&v.iter().map(|&x| x as i128).collect::<Vec<_>>(), Rat::one())?;
    }
    for k in reduce_row(&ints)?.kernel {
        if lat.reduce(&k)?.is_none() {
            let v: Vec<i64> = k.iter().map(|&x| x as i64).collect();
            lat.insert(&k, Rat::one())?;
            out.push(v);
        }
    }
    Ok(out)
}

/// a ~ b: v(a) = v(b) < v(a − b).
pub fn equivalent(ev: &Evaluator, a: &WeylElement, b: &WeylElement) -> Result<bool> {
    if a.is_zero() || b.is_zero() {
        return Err(Error::NonzeroRequired);
    }
    let va = ev.eval(a)?;
    Ok(va == ev.eval(b)? && va < ev.eval(&(a - b))?)
}

#[derive(Clone, Debug, Serialize)]
pub struct CommutatorViolation {
    pub a: String,
    pub b: String,
    pub commutator_value: String,
    pub product_value: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct StronglyAbelianReport {
    pub trials: usize,
    pub violations: Vec<CommutatorViolation>,
}

/// Check v([a, b]) > v(a) + v(b) on random pairs.
pub fn strongly_abelian_sample(ev: &Evaluator, seed: u64, trials: usize) -> Result<StronglyAbelianReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut violations = Vec::new();
    let scale = ev.descriptor().xi_scale.clone();
    for _ in 0..trials {
        let da = rng.gen_range(1..=4);
        let db = rng.gen_range(1..=4);
        let a = random_element(&mut rng, 3, da, 4);
        let b = random_element(&mut rng, 3, db, 4);
        if a.is_zero() || b.is_zero() {
            continue;
        }
        let c = ev.eval(&a.commutator(&b))?;
        let p = &ev.eval(&a)? + &ev.eval(&b)?;
        if c <= p {
            violations.push(CommutatorViolation {
                a: a.to_string(),
                b: b.to_string(),
                commutator_value: c.display(&scale),
                product_value: p.display(&scale),
            });
        }
    }
    Ok(StronglyAbelianReport { trials, violations })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::descriptor::{OmegaStep, Rule};
    use crate::parse::parse;

    fn p(s: &str) -> WeylElement {
        parse(s).unwrap()
    }

    fn q(s: &str) -> Value {
        Value::rational(s.parse().unwrap())
    }

    #[test]
    fn worked_example_values() {
        let ev = Evaluator::new(&OmegaDescriptor::worked_example(), DEFAULT_DEPTH).unwrap();
        assert_eq!(ev.eval(&p("y")).unwrap(), q("1/2"));
        assert_eq!(ev.eval(&p("x*y^2 - 1")).unwrap(), q("1/4"));
        assert_eq!(ev.eval(&p("x^2*y^4 - 1")).unwrap(), q("1/4"));
        assert_eq!(ev.eval(&p("y*x")).unwrap(), q("-1/2"));
        assert_eq!(ev.eval(&p("0")).unwrap(), Value::Infinity);
        assert_eq!(ev.residue(&p("x*y^2")).unwrap(), Rat::one());
        assert_eq!(ev.residue(&p("x^2*y^4")).unwrap(), Rat::one());
        assert_eq!(ev.residue(&p("5")).unwrap(), Rat::from(5));
        assert!(matches!(ev.residue(&p("y")), Err(Error::NonzeroValue { .. })));
        let w2 = ev.omega(2).unwrap();
        let xi = Value::with_scale(Rat::zero(), 1, &Rat::new(1, 8), 0);
        assert_eq!(ev.eval(&w2).unwrap(), xi);
    }

    #[test]
    fn worked_example_keys() {
        let ev = Evaluator::new(&OmegaDescriptor::worked_example(), DEFAULT_DEPTH).unwrap();
        let keys = ev.keys(3).unwrap();
        assert_eq!(keys[1].phi, p("y^2 - x^-1"));
        assert_eq!(keys[1].lambda, q("5/4"));
        assert_eq!(keys[2].phi, p("(y^2 - x^-1)^2 - x^-2*y"));
        let xi = Value::with_scale(Rat::new(5, 2), 1, &Rat::new(1, 8), 0);
        assert_eq!(keys[2].lambda, xi);
        assert_eq!(keys[2].ehat, None);
    }

    #[test]
    fn fractions_and_equivalence() {
        let ev = Evaluator::new(&OmegaDescriptor::worked_example(), DEFAULT_DEPTH).unwrap();
        let f = WeylFraction::new(p("y^2"), p("y"));
        assert_eq!(ev.eval_fraction(&f).unwrap(), q("1/2"));
        let g = WeylFraction::new(p("x*y^2"), p("1"));
        assert_eq!(ev.residue_fraction(&g).unwrap(), Rat::one());
        assert!(equivalent(&ev, &p("x*y^2"), &(p("x*y^2") + p("(x*y^2 - 1)^2"))).unwrap());
        assert!(!equivalent(&ev, &p("y"), &p("x")).unwrap());
        assert!(equivalent(&ev, &p("y"), &p("y")).unwrap());
    }

    #[test]
    fn gap_values() {
        let ev = Evaluator::new(&OmegaDescriptor::worked_example(), DEFAULT_DEPTH).unwrap();
        assert_eq!(monomial_gap_value(&ev, &[1, 2]).unwrap(), q("1/4"));
        assert_eq!(monomial_gap_value(&ev, &[]).unwrap(), Value::Infinity);
        // x·ω_1⁴ and x²y⁴ both have residue 1 and gap v(ω_1) or v(ω_2)
        let direct = ev.eval(&(p("x^2*y^4") - p("1"))).unwrap();
        assert_eq!(monomial_gap_value(&ev, &[2, 4]).unwrap(), direct);
        let xi = Value::with_scale(Rat::zero(), 1, &Rat::new(1, 8), 0);
        assert_eq!(monomial_gap_value(&ev, &[1, 0, 4]).unwrap(), xi);
    }

    #[test]
    fn unit_generator_examples() {
        let w = OmegaDescriptor::worked_example();
        assert!(unit_generators(&w, 0).unwrap().is_empty());
        assert_eq!(unit_generators(&w, 1).unwrap(), vec![vec![1, 2]]);
        let g = unit_generators(&w, 2).unwrap();
        assert!(g.contains(&vec![1, 2, 0]) && g.contains(&vec![1, 0, 4]));
        let mixed = OmegaDescriptor::finite(vec![OmegaStep::new(1, 2, 4), OmegaStep::new(1, 3, 8)]);
        // values −1, 1/2, 1/3: the two ρ vectors already span the kernel
        assert_eq!(unit_generators(&mixed, 2).unwrap(), vec![vec![1, 2, 0], vec![1, 0, 3]]);
    }

    #[test]
    fn commutators_strictly_above() {
        let ev = Evaluator::new(&OmegaDescriptor::worked_example(), DEFAULT_DEPTH).unwrap();
        let c = ev.eval(&p("x").commutator(&p("y"))).unwrap();
        assert_eq!(c, Value::zero());
        let w1 = ev.omega(1).unwrap();
        assert_eq!(ev.eval(&w1.commutator(&p("x"))).unwrap(), q("-1/2"));
        let rep = strongly_abelian_sample(&ev, 7, 40).unwrap();
        assert!(rep.violations.is_empty(), "{:?}", rep.violations);
    }

    #[test]
    fn rule_descriptors() {
        let h = Evaluator::new(&OmegaDescriptor::halving(), DEFAULT_DEPTH).unwrap();
        assert_eq!(h.eval(&p("x*y^2 - 1")).unwrap(), q("1/4"));
        let w2 = h.omega(2).unwrap();
        assert_eq!(h.eval(&w2).unwrap(), q("1/8"));
        let c = OmegaDescriptor::with_rule(vec![], Rule::parse("constant(1,3,-1)").unwrap());
        let ev = Evaluator::new(&c, DEFAULT_DEPTH).unwrap();
        assert_eq!(ev.eval(&p("x*y^3 + 1")).unwrap(), q("1/9"));
        assert_eq!(ev.residue(&p("x*y^3")).unwrap(), Rat::from(-1));
    }

    #[test]
    fn finite_descriptor_runs_out() {
        let d = OmegaDescriptor::finite(vec![OmegaStep::new(1, 2, 4)]);
        let ev = Evaluator::new(&d, DEFAULT_DEPTH).unwrap();
        assert_eq!(ev.eval(&p("y")).unwrap(), q("1/2"));
        assert!(matches!(ev.eval(&p("x*y^2 - 4")), Err(Error::DepthExceeded { .. })));
    }
}
