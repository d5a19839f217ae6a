//! Seeded random Weyl elements for property checks.

use rand::Rng;

use crate::rat::Rat;
use crate::weyl::WeylElement;

/// Small nonzero rational.
pub fn random_coeff<R: Rng>(rng: &mut R) -> Rat {
    let mut n: i64 = rng.gen_range(-9..=9);
    if n == 0 {
        n = 1;
    }
    Rat::new(n, rng.gen_range(1..=3))
}

/// Up to `terms` monomials x^i y^j with i ≤ max_x, j ≤ max_y; nonzero unless all terms cancel.
pub fn random_element<R: Rng>(rng: &mut R, max_x: i64, max_y: u32, terms: usize) -> WeylElement {
    let k = rng.gen_range(1..=terms.max(1));
    WeylElement::from_terms((0..k).map(|_| {
        let i = rng.gen_range(0..=max_x);
        let j = rng.gen_range(0..=max_y);
        ((i, j), random_coeff(rng))
    }))
}

/// Random element of total y-degree exactly `deg` (leading term forced).
pub fn random_of_degree<R: Rng>(rng: &mut R, max_x: i64, deg: u32, terms: usize) -> WeylElement {
    let mut e = random_element(rng, max_x, deg, terms);
    let i = rng.gen_range(0..=max_x);
    e.add_term((i, deg), random_coeff(rng));
    if e.y_degree() != Some(deg) {
        e.add_term((i, deg), Rat::one());
    }
    e
}

/// Linear combination of products of the given elements plus a small random part.
pub fn structured_element<R: Rng>(rng: &mut R, pool: &[WeylElement], max_deg: u32) -> WeylElement {
    let mut acc = WeylElement::zero();
    for _ in 0..rng.gen_range(1..=3) {
        let mut prod = WeylElement::monomial(random_coeff(rng), rng.gen_range(0..=2), 0);
        for _ in 0..rng.gen_range(1..=2) {
            let cand = &pool[rng.gen_range(0..pool.len())];
            let next = prod.times(cand);
            if next.y_degree().unwrap_or(0) <= max_deg {
                prod = next;
            }
        }
        acc = acc + prod;
    }
    if rng.gen_bool(0.5) {
        let noise = random_element(rng, 2, max_deg.min(3), 2);
        acc = acc + noise;
    }
    acc
}
