//! Extending a valuation from A₁ to R[y; d/dx].
//!
//! The extension exists when even-degree steps have positive β and the α
//! signs are compatible along increasing 2-adic exponents. It is fixed by
//! the real roots γ̃_i of β_i, with one free sign when the value group is not
//! 2-divisible. The conversion into a z-sequence runs the case loop on
//! ω_k = (Π x^{m_i/n_i})·z_ℓ·(Π B_i) + C, reading v(C) and its residue off the
//! Z-free part of ω_k at y = a_ℓ + Z.

use serde::Serialize;

use crate::descriptor::{OmegaDescriptor, Tail, Violation};
use crate::error::{Error, Result};
use crate::puiseux::{OrePoly, PuiseuxSeries};
use crate::rat::Rat;
use crate::shadow::{RootExpansion, Step};
use crate::value::Value;
use crate::weyl::WeylElement;
use crate::zseq::{z_eval, ZSequence};

/// Step indices covered by the extension checks.
fn span(desc: &OmegaDescriptor) -> usize {
    desc.finite_len().unwrap_or_else(|| desc.window())
}

fn h_of(desc: &OmegaDescriptor, p: usize) -> Result<u32> {
    desc.h(p)
}

/// All failures of the two extension conditions over the checked prefix.
pub fn extension_violations(desc: &OmegaDescriptor) -> Result<Vec<Violation>> {
    let len = span(desc);
    let mut out = Vec::new();
    for i in 1..=len {
        let s = desc.step(i)?;
        if s.n % 2 == 0 && !s.beta.is_positive() {
            out.push(Violation {
                condition: "(1)",
                indices: vec![i as i64],
                message: format!("n_{i} = {} is even but β_{i} = {} is not positive", s.n, s.beta),
            });
        }
    }
    if !out.is_empty() {
        return Ok(out);
    }
    let hs: Vec<u32> = (0..=len).map(|p| h_of(desc, p)).collect::<Result<_>>()?;
    for i in 0..=len {
        for j in 0..=len {
            if hs[i] >= hs[j] {
                continue;
            }
            for l in 0..=len {
                if l == j || hs[l] < hs[j] {
                    continue;
                }
                let a = desc.alpha(i, j)?.signum() * desc.alpha(i, l)?.signum();
                if a <= 0 {
                    out.push(Violation {
                        condition: "(2)",
                        indices: vec![i as i64, j as i64, l as i64],
                        message: format!("α_{i},{j}·α_{i},{l} < 0 with h_{i} < h_{j} ≤ h_{l}"),
                    });
                }
            }
        }
    }
    Ok(out)
}

pub fn check_extendable(desc: &OmegaDescriptor) -> Result<()> {
    let v = extension_violations(desc)?;
    match v.first() {
        None => Ok(()),
        Some(first) => Err(Error::NotExtendable(first.to_string())),
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct GammaResolution {
    /// γ̃_1..γ̃_k.
    pub gammas: Vec<Rat>,
    pub free_choice_index: Option<usize>,
    pub chosen_sign: Option<i8>,
}

impl GammaResolution {
    pub fn gamma(&self, i: usize) -> &Rat {
        &self.gammas[i - 1]
    }

    fn with_x_slot(&self) -> Vec<Rat> {
        std::iter::once(Rat::one()).chain(self.gammas.iter().cloned()).collect()
    }
}

/// Index whose sign is free, if any: the first step of maximal h ≥ 1 when h
/// is bounded.
pub fn free_index(desc: &OmegaDescriptor) -> Result<Option<usize>> {
    if let Tail::Rule { rule, .. } = &desc.tail {
        if rule.unbounded_h() {
            return Ok(None);
        }
    }
    let len = span(desc);
    let mut best: Option<(u32, usize)> = None;
    for i in 1..=len {
        let h = desc.h(i)?;
        if h >= 1 && best.map_or(true, |(b, _)| h > b) {
            best = Some((h, i));
        }
    }
    Ok(best.map(|(_, i)| i))
}

/// Number of extensions of the valuation to R[y; d/dx].
pub fn extension_count(desc: &OmegaDescriptor) -> Result<usize> {
    check_extendable(desc)?;
    Ok(if free_index(desc)?.is_some() { 2 } else { 1 })
}

pub fn resolve_gammas(desc: &OmegaDescriptor, sign_choice: Option<i8>) -> Result<GammaResolution> {
    check_extendable(desc)?;
    let len = span(desc);
    let free = free_index(desc)?;
    let chosen = match (free, sign_choice) {
        (Some(index), None) => return Err(Error::SignChoiceRequired { index }),
        (None, Some(_)) => return Err(Error::SignChoiceForbidden),
        (Some(_), Some(s)) if s != 1 && s != -1 => {
            return Err(Error::Unsupported(format!("sign choice must be ±1, got {s}")))
        }
        (_, s) => s,
    };
    // Indices beyond the prefix only serve as sign witnesses for rules with unbounded h.
    let reach = match &desc.tail {
        Tail::Rule { .. } => len + 64,
        _ => len,
    };
    let mut mags = Vec::with_capacity(len);
    for i in 1..=len {
        let s = desc.step(i)?;
        let n = u32::try_from(s.n).map_err(|_| Error::Unsupported("step degree too large".into()))?;
        mags.push(s.beta.abs().nth_root(n)?);
    }
    let mut signs = vec![0i32; len + 1];
    signs[0] = 1;
    for i in 1..=len {
        let s = desc.step(i)?;
        if s.n % 2 != 0 {
            signs[i] = s.beta.signum();
            continue;
        }
        let hi = desc.h(i)?;
        for j in 0..=reach {
            if desc.h(j)? > hi {
                signs[i] = desc.alpha(i, j)?.signum();
                break;
            }
        }
    }
    if let Some(f) = free {
        signs[f] = i32::from(chosen.expect("checked"));
        for i in 1..=len {
            if signs[i] == 0 {
                signs[i] = desc.alpha(i, f)?.signum() * signs[f];
            }
        }
    }
    let gammas: Vec<Rat> = (1..=len).map(|i| if signs[i] < 0 { -mags[i - 1].clone() } else { mags[i - 1].clone() }).collect();
    let res = GammaResolution { gammas, free_choice_index: free, chosen_sign: chosen };
    let all = res.with_x_slot();
    for i in 0..=len {
        for j in 0..i {
            let (_, kij, kji) = desc.pair_data(i, j)?;
            if all[i].pow(kij) * all[j].pow(-kji) != desc.alpha(i, j)? {
                return Err(Error::NotExtendable(format!("no choice of γ̃ matches α_{i},{j}")));
            }
        }
    }
    Ok(res)
}

/// N_{k,j} by N_{k,1} = k and N_{k,j+1} = Σ_{l=k}^{n−j} N_{l,j}.
pub fn n_coefficient(n: i64, k: i64, j: i64) -> u64 {
    assert!(j >= 1 && k >= 1);
    if j == 1 {
        return k as u64;
    }
    (k..=n - j + 1).map(|l| n_coefficient(n, l, j - 1)).sum()
}

/// Coefficients of B(u) = Σ_{j=1}^{n} u^{n−j} γ̃^{j−1}, highest power first.
pub fn b_coefficients(n: u32, gamma: &Rat) -> Vec<Rat> {
    (1..=n as i64).map(|j| gamma.pow(j - 1)).collect()
}

/// Value at u = γ̃ of a polynomial in u, which is its residue.
fn at(coeffs: &[Rat], gamma: &Rat) -> Rat {
    coeffs.iter().fold(Rat::zero(), |acc, c| acc * gamma + c)
}

/// Quotient of p(u) − p(γ̃) by u − γ̃.
fn divide_at(coeffs: &[Rat], gamma: &Rat) -> Vec<Rat> {
    let mut out = Vec::with_capacity(coeffs.len().saturating_sub(1));
    let mut acc = Rat::zero();
    for c in &coeffs[..coeffs.len().saturating_sub(1)] {
        acc = acc * gamma + c;
        out.push(acc.clone());
    }
    out
}

/// S_j with B − res B = (u − γ̃)·S_1 and S_j − res S_j = (u − γ̃)·S_{j+1}.
pub fn s_coefficients(n: u32, gamma: &Rat, j: u32) -> Vec<Rat> {
    assert!(j >= 1 && j < n, "S_j needs 1 ≤ j < n");
    let mut p = b_coefficients(n, gamma);
    for _ in 0..j {
        p = divide_at(&p, gamma);
    }
    p
}

pub fn b_residue(n: u32, gamma: &Rat) -> Rat {
    Rat::from(n as i64) * gamma.pow(n as i64 - 1)
}

pub fn s_residue(n: u32, gamma: &Rat, j: u32) -> Rat {
    at(&s_coefficients(n, gamma, j), gamma)
}

fn degree(desc: &OmegaDescriptor, i: usize) -> Result<u32> {
    u32::try_from(desc.step(i)?.n).map_err(|_| Error::Unsupported("step degree too large".into()))
}

/// u_i = x^{m_i/n_i}·ω_{i−1}.
pub fn u_element(desc: &OmegaDescriptor, i: usize) -> Result<OrePoly> {
    let s = desc.step(i)?;
    let w = OrePoly::from_weyl(&desc.omega_laurent(i - 1)?);
    Ok(w.scale_left(&PuiseuxSeries::monomial(Rat::one(), -Rat::new(s.m, s.n))))
}

fn horner(coeffs: &[Rat], u: &OrePoly) -> Result<OrePoly> {
    let mut acc = OrePoly::zero();
    for c in coeffs {
        acc = acc.mul(u)?.add(&OrePoly::constant(PuiseuxSeries::constant(c.clone())));
    }
    Ok(acc)
}

pub fn b_element(desc: &OmegaDescriptor, gammas: &GammaResolution, i: usize) -> Result<OrePoly> {
    horner(&b_coefficients(degree(desc, i)?, gammas.gamma(i)), &u_element(desc, i)?)
}

pub fn s_element(desc: &OmegaDescriptor, gammas: &GammaResolution, i: usize, j: u32) -> Result<OrePoly> {
    horner(&s_coefficients(degree(desc, i)?, gammas.gamma(i), j), &u_element(desc, i)?)
}

/// One pass of the case loop.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CaseRecord {
    pub case: u8,
    pub k: usize,
    pub emitted: Option<(Rat, Rat)>,
    pub terminal: Option<String>,
}

#[derive(Clone, Debug)]
pub struct Conversion {
    pub entries: Vec<(Rat, Rat)>,
    pub terminal: Option<Value>,
    pub trace: Vec<CaseRecord>,
}

impl Conversion {
    /// The full z-sequence; only a terminal conversion determines its tail.
    pub fn sequence(&self) -> Result<ZSequence> {
        match &self.terminal {
            Some(t) => ZSequence::terminal(self.entries.clone(), t.clone()),
            None => Err(Error::Unsupported("conversion has no terminal value; only a prefix is known".into())),
        }
    }
}

/// Runs the case loop until `depth` pairs are emitted or the terminal value appears.
pub fn omega_to_z(desc: &OmegaDescriptor, gammas: &GammaResolution, depth: usize) -> Result<Conversion> {
    let mut out = Conversion { entries: Vec::new(), terminal: None, trace: Vec::new() };
    if depth == 0 {
        return Ok(out);
    }
    let budget = depth.max(gammas.gammas.len()) + 2;
    let mut ex = RootExpansion::with_tildes(desc, gammas.with_x_slot(), budget);
    let mut bbar = Rat::one();
    while out.entries.len() < depth && out.terminal.is_none() {
        let rec = match ex.step()? {
            Step::Below { k, r, gamma } => {
                let expect = gammas.gamma(k + 1) / &bbar;
                if gamma != expect {
                    return Err(Error::Internal(format!("γ = {gamma} but γ̃_{}·Π res(B)^-1 = {expect}", k + 1)));
                }
                CaseRecord { case: 1, k, emitted: Some((r, gamma)), terminal: None }
            }
            Step::Above { k, r, gamma } => CaseRecord { case: 2, k, emitted: Some((r, gamma)), terminal: None },
            Step::Terminal { k, value } => {
                out.terminal = Some(value.clone());
                CaseRecord { case: 1, k, emitted: None, terminal: Some(value.display(&desc.xi_scale)) }
            }
            Step::Explained { k } => {
                bbar *= b_residue(degree(desc, k + 1)?, gammas.gamma(k + 1));
                CaseRecord { case: 4, k, emitted: None, terminal: None }
            }
            Step::Gap { k, r, gamma } => CaseRecord { case: 5, k, emitted: Some((r, gamma)), terminal: None },
        };
        if let Some(e) = &rec.emitted {
            if e.0 >= Rat::one() {
                return Err(Error::Internal(format!("emitted exponent {} is not below 1", e.0)));
            }
            out.entries.push(e.clone());
        }
        out.trace.push(rec);
    }
    Ok(out)
}

#[derive(Clone, Debug, Serialize)]
pub struct RoundtripMismatch {
    pub element: String,
    pub eval: String,
    pub z_eval: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct RoundtripReport {
    pub checked: usize,
    pub mismatches: Vec<RoundtripMismatch>,
}

/// Compares eval with the z-valuation on the embedded elements.
pub fn roundtrip_check(
    desc: &OmegaDescriptor,
    gammas: &GammaResolution,
    samples: &[WeylElement],
    depth: usize,
) -> Result<RoundtripReport> {
    let seq = omega_to_z(desc, gammas, depth)?.sequence()?;
    let ev = crate::eval::Evaluator::new(desc, depth)?;
    let mut mismatches = Vec::new();
    for f in samples {
        let a = ev.eval(f)?;
        let b = z_eval(&seq, &OrePoly::from_weyl(f), depth)?;
        if a != b {
            mismatches.push(RoundtripMismatch {
                element: crate::parse::print(f),
                eval: a.display(&desc.xi_scale),
                z_eval: b.display(&desc.xi_scale),
            });
        }
    }
    Ok(RoundtripReport { checked: samples.len(), mismatches })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::descriptor::{OmegaStep, Rule};
    use crate::parse::parse;

    fn st(m: i64, n: i64, b: i64) -> OmegaStep {
        OmegaStep::new(m, n, b)
    }

    fn q(s: &str) -> Rat {
        s.parse().unwrap()
    }

    #[test]
    fn extendability() {
        check_extendable(&OmegaDescriptor::worked_example()).unwrap();
        let neg = OmegaDescriptor::finite(vec![st(1, 2, -1), st(1, 3, 1)]);
        let v = extension_violations(&neg).unwrap();
        assert_eq!(v[0].condition, "(1)");
        assert_eq!(v[0].indices, vec![1]);
        let mut twisted = OmegaDescriptor::finite(vec![st(1, 2, 1), st(1, 4, 1), st(1, 8, 1)]);
        twisted.alpha_signs = [((1, 2), 1), ((1, 3), -1), ((2, 3), 1)].into_iter().collect();
        let v = extension_violations(&twisted).unwrap();
        assert!(v.iter().any(|x| x.condition == "(2)" && x.indices == vec![1, 2, 3]));
        assert!(matches!(check_extendable(&twisted), Err(Error::NotExtendable(_))));
    }

    #[test]
    fn gamma_resolution() {
        let cube = OmegaDescriptor::finite(vec![st(1, 3, 8)]);
        let r = resolve_gammas(&cube, None).unwrap();
        assert_eq!(r.gammas, vec![q("2")]);
        assert!(matches!(resolve_gammas(&cube, Some(1)), Err(Error::SignChoiceForbidden)));
        let sq = OmegaDescriptor::finite(vec![st(1, 2, 4)]);
        assert!(matches!(resolve_gammas(&sq, None), Err(Error::SignChoiceRequired { index: 1 })));
        assert_eq!(resolve_gammas(&sq, Some(1)).unwrap().gammas, vec![q("2")]);
        assert_eq!(resolve_gammas(&sq, Some(-1)).unwrap().gammas, vec![q("-2")]);
        let h = resolve_gammas(&OmegaDescriptor::halving(), None).unwrap();
        assert!(h.gammas.iter().all(|g| g.is_one()));
        assert_eq!(h.free_choice_index, None);
        let w = OmegaDescriptor::worked_example();
        let r = resolve_gammas(&w, Some(-1)).unwrap();
        assert_eq!(r.free_choice_index, Some(2));
        assert_eq!(r.gammas, vec![q("1"), q("-1")]);
        assert_eq!(extension_count(&w).unwrap(), 2);
        assert_eq!(extension_count(&OmegaDescriptor::halving()).unwrap(), 1);
    }

    #[test]
    fn n_and_residues() {
        for k in 1..5 {
            assert_eq!(n_coefficient(4, k, 1), k as u64);
        }
        assert_eq!(n_coefficient(4, 1, 2), 6);
        assert_eq!(b_residue(2, &q("1")), q("2"));
        // the recurrence reproduces res S_1 = N_{1,2}·γ̃^{n−2}
        for n in 2..7u32 {
            let g = q("3/2");
            assert_eq!(s_residue(n, &g, 1), Rat::from(n_coefficient(n as i64, 1, 2) as i64) * g.pow(n as i64 - 2));
        }
        // but not the quotient S_2 for n = 4: exact S_2 = u + 3γ̃
        assert_eq!(s_coefficients(4, &q("1"), 2), vec![q("1"), q("3")]);
        assert_ne!(s_residue(4, &q("1"), 2), Rat::from(n_coefficient(4, 1, 3) as i64));
    }

    #[test]
    fn telescoping_as_ore_identities() {
        for (m, n, b) in [(1, 2, 4), (1, 3, 8), (1, 4, 1), (3, 4, 16)] {
            let d = OmegaDescriptor::finite(vec![st(m, n, b)]);
            let sign = if n % 2 == 0 { Some(1) } else { None };
            let g = resolve_gammas(&d, sign).unwrap();
            let u = u_element(&d, 1).unwrap();
            let gt = g.gamma(1).clone();
            let u_minus = u.sub(&OrePoly::constant(PuiseuxSeries::constant(gt.clone())));
            let bb = b_element(&d, &g, 1).unwrap();
            let s1 = s_element(&d, &g, 1, 1).unwrap();
            let lhs = u_minus.mul(&s1).unwrap();
            let rhs = bb.sub(&OrePoly::constant(PuiseuxSeries::constant(b_residue(n as u32, &gt))));
            assert_eq!(lhs, rhs);
            for j in 1..(n as u32 - 1) {
                let sj = s_element(&d, &g, 1, j).unwrap();
                let sn = s_element(&d, &g, 1, j + 1).unwrap();
                let res = s_residue(n as u32, &gt, j);
                assert_eq!(u_minus.mul(&sn).unwrap(), sj.sub(&OrePoly::constant(PuiseuxSeries::constant(res))));
            }
            // (u − γ̃)·B = ω_1 up to an ordering correction of lower degree in y
            let w1 = OrePoly::from_weyl(&d.omega_laurent(1).unwrap());
            let gap = u_minus.mul(&bb).unwrap().sub(&w1);
            assert!(gap.degree().map_or(true, |e| e < n as usize));
        }
    }

    #[test]
    fn worked_conversion() {
        let w = OmegaDescriptor::worked_example();
        let xi = Value::with_scale(q("3/4"), 1, &q("1/8"), 0);
        for sign in [1, -1] {
            let g = resolve_gammas(&w, Some(sign)).unwrap();
            let c = omega_to_z(&w, &g, 64).unwrap();
            assert_eq!(c.entries, vec![(q("1/2"), q("1")), (q("3/4"), Rat::from(sign as i64) / q("2"))]);
            assert_eq!(c.terminal, Some(xi.clone()));
            assert_eq!(c.trace[0].case, 1);
            assert!(omega_to_z(&w, &g, 0).unwrap().entries.is_empty());
            let samples = ["y", "x*y^2 - 1", "x^2*y^4 - 2*x*y^2 + 1 - x^(0)*0", "y^3 + x", "x*y - 1"]
                .iter()
                .filter_map(|s| parse(s).ok())
                .collect::<Vec<_>>();
            let rep = roundtrip_check(&w, &g, &samples, 64).unwrap();
            assert!(rep.mismatches.is_empty(), "{:?}", rep.mismatches);
        }
        let first = OmegaDescriptor::with_terminal(vec![st(1, 2, 1)], q("0"), 1, q("1/8"));
        let g = resolve_gammas(&first, Some(1)).unwrap();
        assert_eq!(omega_to_z(&first, &g, 1).unwrap().entries, vec![(q("1/2"), q("1"))]);
    }

    #[test]
    fn random_roundtrip() {
        use rand::SeedableRng;
        let descs = [
            OmegaDescriptor::worked_example(),
            OmegaDescriptor::with_terminal(vec![st(1, 2, 4), st(1, 3, 8)], q("0"), 1, q("1/10")),
        ];
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for d in &descs {
            let samples: Vec<_> = (0..40).map(|_| crate::sample::random_element(&mut rng, 3, 5, 4)).collect();
            for sign in [1, -1] {
                let g = resolve_gammas(d, Some(sign)).unwrap();
                let rep = roundtrip_check(d, &g, &samples, 64).unwrap();
                assert!(rep.mismatches.is_empty(), "{:?}", rep.mismatches);
            }
        }
    }

    #[test]
    fn rule_prefix() {
        let h = OmegaDescriptor::halving();
        let g = resolve_gammas(&h, None).unwrap();
        let c = omega_to_z(&h, &g, 4).unwrap();
        assert_eq!(c.entries.len(), 4);
        assert!(c.entries.windows(2).all(|p| p[0].0 < p[1].0));
        assert!(c.sequence().is_err());
        let c3 = OmegaDescriptor::with_rule(vec![], Rule::parse("constant(1,3,-1)").unwrap());
        let g = resolve_gammas(&c3, None).unwrap();
        assert!(g.gammas.iter().all(|x| *x == q("-1")));
        assert_eq!(omega_to_z(&c3, &g, 3).unwrap().entries.len(), 3);
    }
}
