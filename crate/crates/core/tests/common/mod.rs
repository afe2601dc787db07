//! Test-only oracles and generators, independent of the library's
//! evaluation paths.

#![allow(dead_code)]

use hlineq::{ExtReal, NonNegTensor, Perm, Spaces};
use num_bigint::BigInt;
use num_rational::BigRational;
use rand::Rng;

/// Exact fraction over i128 for the δ oracle.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Frac(pub i128, pub i128);

fn gcd(a: i128, b: i128) -> i128 {
    if b == 0 {
        a.abs()
    } else {
        gcd(b, a % b)
    }
}

impl Frac {
    pub fn new(n: i128, d: i128) -> Self {
        let g = gcd(n, d).max(1);
        let s = if d < 0 { -1 } else { 1 };
        Frac(s * n / g, s * d / g)
    }
    pub fn add(self, o: Frac) -> Frac {
        Frac::new(self.0 * o.1 + o.0 * self.1, self.1 * o.1)
    }
    pub fn sub(self, o: Frac) -> Frac {
        Frac::new(self.0 * o.1 - o.0 * self.1, self.1 * o.1)
    }
    pub fn lt_one(self) -> bool {
        self.0 < self.1
    }
    pub fn recip(self) -> Frac {
        Frac::new(self.1, self.0)
    }
}

/// Reciprocals `1/p` as fractions, `None` meaning `p = ∞`.
pub type RecipTuple = Vec<Frac>;

/// `δ` from reciprocals: `None` is `∞`.
pub fn delta_oracle(recips: &[Frac]) -> Option<Frac> {
    let s = recips.iter().fold(Frac(0, 1), |acc, &r| acc.add(r));
    if s.lt_one() {
        Some(Frac(1, 1).sub(s).recip())
    } else {
        None
    }
}

pub fn ext_from_recip(r: Frac) -> ExtReal {
    if r.0 == 0 {
        ExtReal::Infinity
    } else {
        ExtReal::from_ratio(BigRational::new(BigInt::from(r.1), BigInt::from(r.0))).unwrap()
    }
}

pub fn ext_from_frac(f: Option<Frac>) -> ExtReal {
    match f {
        None => ExtReal::Infinity,
        Some(f) => {
            ExtReal::from_ratio(BigRational::new(BigInt::from(f.0), BigInt::from(f.1))).unwrap()
        }
    }
}

/// Random reciprocals in `[0,1]` as fractions with small denominators.
pub fn rand_recips(rng: &mut impl Rng, m: usize, first_case: bool) -> RecipTuple {
    loop {
        let denom: i128 = rng.gen_range(2..=24);
        let r: Vec<Frac> = (0..m)
            .map(|_| {
                if rng.gen_bool(0.1) {
                    Frac(0, 1)
                } else {
                    Frac::new(rng.gen_range(0..=denom), denom)
                }
            })
            .collect();
        let s = r.iter().fold(Frac(0, 1), |acc, &x| acc.add(x));
        if !first_case || s.lt_one() {
            return r;
        }
    }
}

pub fn spaces_from_recips(r: &[Frac]) -> Spaces {
    Spaces::new(r.iter().map(|&x| ext_from_recip(x)).collect()).unwrap()
}

pub fn rand_perm(rng: &mut impl Rng, m: usize) -> Perm {
    let mut v: Vec<usize> = (0..m).collect();
    for i in (1..m).rev() {
        v.swap(i, rng.gen_range(0..=i));
    }
    Perm::new(v).unwrap()
}

pub fn rand_tensor(rng: &mut impl Rng, shape: Vec<usize>) -> NonNegTensor {
    let len = shape.iter().product();
    NonNegTensor::new(shape, (0..len).map(|_| rng.gen::<f64>()).collect()).unwrap()
}

/// Nested mixed norm straight from its definition, indexing the original
/// tensor through σ (no axis permutation, no overflow handling).
pub fn naive_mixed_norm(a: &NonNegTensor, sigma: &[usize], q: &[f64]) -> f64 {
    fn level(a: &NonNegTensor, sigma: &[usize], q: &[f64], k: usize, idx: &mut Vec<usize>) -> f64 {
        if k == sigma.len() {
            return a.get(idx).unwrap();
        }
        let axis = sigma[k];
        let vals: Vec<f64> = (0..a.shape()[axis])
            .map(|j| {
                idx[axis] = j;
                level(a, sigma, q, k + 1, idx)
            })
            .collect();
        if q[k].is_infinite() {
            vals.into_iter().fold(0.0, f64::max)
        } else {
            vals.iter()
                .map(|v| v.powf(q[k]))
                .sum::<f64>()
                .powf(1.0 / q[k])
        }
    }
    level(a, sigma, q, 0, &mut vec![0; a.order()])
}

pub fn rel_close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}

pub fn x(s: &str) -> ExtReal {
    s.parse().unwrap()
}

pub fn sp(v: &[&str]) -> Spaces {
    Spaces::new(v.iter().map(|s| x(s)).collect()).unwrap()
}
