//! Integer lattices of exponent vectors.
//!
//! [`ResidueLattice`] keeps a row-echelon basis of a sublattice of ℤⁿ where
//! every row carries a multiplicative label (a residue). Row operations act
//! on labels the way monomial exponents act on residues, so reducing a query
//! vector to zero yields its label. A zero row with label ≠ 1 exposes
//! inconsistent input data.

use crate::error::{Error, Result};
use crate::rat::Rat;

#[derive(Clone, Debug)]
struct Row {
    v: Vec<i128>,
    pivot: usize,
    res: Rat,
}

#[derive(Clone, Debug)]
pub struct ResidueLattice {
    dim: usize,
    rows: Vec<Row>,
}

fn first_nonzero(v: &[i128]) -> Option<usize> {
    v.iter().position(|&a| a != 0)
}

fn axpy(dst: &mut [i128], k: i128, src: &[i128]) -> Result<()> {
    for (d, s) in dst.iter_mut().zip(src) {
        *d = k
            .checked_mul(*s)
            .and_then(|t| d.checked_sub(t))
            .ok_or_else(|| Error::Internal("lattice entry overflow".into()))?;
    }
    Ok(())
}

fn label_pow(r: &Rat, k: i128) -> Result<Rat> {
    let k = i64::try_from(k).map_err(|_| Error::Internal("residue exponent overflow".into()))?;
    Ok(r.pow(k))
}

impl ResidueLattice {
    pub fn new(dim: usize) -> Self {
        ResidueLattice {
            dim,
            rows: Vec::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rank(&self) -> usize {
        self.rows.len()
    }

    /// Add a generator with its label.
    pub fn insert(&mut self, v: &[i128], res: Rat) -> Result<()> {
        assert_eq!(v.len(), self.dim);
        let mut v = v.to_vec();
        let mut r = res;
        let mut idx = 0;
        while idx < self.rows.len() {
            let Some(fv) = first_nonzero(&v) else { break };
            let p = self.rows[idx].pivot;
            if fv < p {
                break;
            }
            if fv > p {
                idx += 1;
                continue;
            }
            loop {
                let b = v[p];
                if b == 0 {
                    break;
                }
                let a = self.rows[idx].v[p];
                let q = a / b;
                let row = &mut self.rows[idx];
                axpy(&mut row.v, q, &v)?;
                row.res = &row.res * label_pow(&r, -q)?;
                std::mem::swap(&mut row.v, &mut v);
                std::mem::swap(&mut row.res, &mut r);
            }
            let row = &mut self.rows[idx];
            if row.v[p] < 0 {
                row.v.iter_mut().for_each(|a| *a = -*a);
                row.res = row.res.recip();
            }
            idx += 1;
        }
        match first_nonzero(&v) {
            None => {
                if r.is_one() {
                    Ok(())
                } else {
                    Err(Error::ResidueInconsistent(format!(
                        "relation with residue {r} instead of 1"
                    )))
                }
            }
            Some(p) => {
                if v[p] < 0 {
                    v.iter_mut().for_each(|a| *a = -*a);
                    r = r.recip();
                }
                let pos = self.rows.iter().position(|row| row.pivot > p).unwrap_or(self.rows.len());
                self.rows.insert(pos, Row { v, pivot: p, res: r });
                Ok(())
            }
        }
    }

    /// Label of a lattice vector, or None when the vector is not in the lattice.
    pub fn reduce(&self, v: &[i128]) -> Result<Option<Rat>> {
        assert_eq!(v.len(), self.dim);
        let mut v = v.to_vec();
        let mut r = Rat::one();
        for row in &self.rows {
            let c = v[row.pivot];
            if c == 0 {
                continue;
            }
            let a = row.v[row.pivot];
            if c % a != 0 {
                return Ok(None);
            }
            let q = c / a;
            axpy(&mut v, q, &row.v)?;
            r = r * label_pow(&row.res, q)?;
        }
        Ok(if first_nonzero(&v).is_none() { Some(r) } else { None })
    }
}

/// Result of unimodular column reduction of an integer row vector.
pub struct RowReduction {
    /// gcd of the entries (nonnegative).
    pub gcd: i128,
    /// Integer coefficients u with u·a = gcd.
    pub bezout: Vec<i128>,
    /// A basis of {k : k·a = 0}.
    pub kernel: Vec<Vec<i128>>,
}

/// Reduce `a` by unimodular column operations.
pub fn reduce_row(a: &[i128]) -> Result<RowReduction> {
    let n = a.len();
    let mut vals = a.to_vec();
    let mut basis: Vec<Vec<i128>> = (0..n)
        .map(|i| (0..n).map(|j| i128::from(i == j)).collect())
        .collect();
    loop {
        let mut nz: Vec<usize> = (0..n).filter(|&i| vals[i] != 0).collect();
        if nz.len() <= 1 {
            break;
        }
        nz.sort_by_key(|&i| vals[i].abs());
        let small = nz[0];
        for &i in &nz[1..] {
            let q = vals[i] / vals[small];
            vals[i] -= q * vals[small];
            let src = basis[small].clone();
            axpy(&mut basis[i], q, &src)?;
        }
    }
    let (gcd, bezout) = match (0..n).find(|&i| vals[i] != 0) {
        Some(i) if vals[i] < 0 => (-vals[i], basis[i].iter().map(|x| -x).collect()),
        Some(i) => (vals[i], basis[i].clone()),
        None => (0, vec![0; n]),
    };
    let kernel = (0..n).filter(|&i| vals[i] == 0).map(|i| basis[i].clone()).collect();
    Ok(RowReduction { gcd, bezout, kernel })
}

/// Integer vector c with Σ c_i·w_i = target, for rational w_i and target.
pub fn solve_rational(weights: &[Rat], target: &Rat) -> Result<Option<Vec<i128>>> {
    let den = weights
        .iter()
        .chain(std::iter::once(target))
        .fold(num_bigint::BigInt::from(1), |acc, w| num_integer::Integer::lcm(&acc, w.denom()));
    let to_int = |w: &Rat| -> Result<i128> {
        let s = w * Rat::from(den.clone());
        i128::try_from(s.numer().clone()).map_err(|_| Error::Internal("weight overflow".into()))
    };
    let a: Vec<i128> = weights.iter().map(to_int).collect::<Result<_>>()?;
    let t = to_int(target)?;
    let red = reduce_row(&a)?;
    if red.gcd == 0 {
        return Ok(if t == 0 { Some(vec![0; a.len()]) } else { None });
    }
    if t % red.gcd != 0 {
        return Ok(None);
    }
    let k = t / red.gcd;
    Ok(Some(red.bezout.iter().map(|u| u * k).collect()))
}
