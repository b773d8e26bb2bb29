use std::cmp::Ordering;
use std::fmt;
use std::iter::{Product, Sum};
use std::ops::{Add, AddAssign, Mul, MulAssign, Neg, Sub, SubAssign};
use std::str::FromStr;

use num_traits::{One, Zero};

use super::PrimeField;
use crate::Error;

/// Element of the BN254 scalar field, stored in Montgomery form.
///
/// p = 21888242871839275222246405745257275088548364400416034343698204186575808495617
#[derive(Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct Fr([u64; 4]);

const MODULUS: [u64; 4] = [
    0x43e1f593f0000001,
    0x2833e84879b97091,
    0xb85045b68181585d,
    0x30644e72e131a029,
];

/// 2^256 mod p
const R: [u64; 4] = [
    0xac96341c4ffffffb,
    0x36fc76959f60cd29,
    0x666ea36f7879462e,
    0x0e0a77c19a07df2f,
];

/// 2^512 mod p
const R2: [u64; 4] = [
    0x1bb8e645ae216da7,
    0x53fe3ab1e35c59e3,
    0x8c49833d53bb8085,
    0x0216d0b17f4e44a5,
];

/// -p^{-1} mod 2^64
const INV: u64 = 0xc2e1f593efffffff;

#[inline(always)]
const fn adc(a: u64, b: u64, carry: u64) -> (u64, u64) {
    let t = a as u128 + b as u128 + carry as u128;
    (t as u64, (t >> 64) as u64)
}

#[inline(always)]
const fn sbb(a: u64, b: u64, borrow: u64) -> (u64, u64) {
    let t = (a as u128).wrapping_sub(b as u128 + borrow as u128);
    (t as u64, (t >> 127) as u64)
}

/// a + b * c + carry
#[inline(always)]
const fn mac(a: u64, b: u64, c: u64, carry: u64) -> (u64, u64) {
    let t = a as u128 + (b as u128) * (c as u128) + carry as u128;
    (t as u64, (t >> 64) as u64)
}

#[inline(always)]
fn geq(a: &[u64; 4], b: &[u64; 4]) -> bool {
    for i in (0..4).rev() {
        if a[i] != b[i] {
            return a[i] > b[i];
        }
    }
    true
}

#[inline(always)]
fn sub_limbs(a: &[u64; 4], b: &[u64; 4]) -> ([u64; 4], u64) {
    let mut r = [0u64; 4];
    let mut borrow = 0;
    for i in 0..4 {
        let (v, bo) = sbb(a[i], b[i], borrow);
        r[i] = v;
        borrow = bo;
    }
    (r, borrow)
}

#[inline(always)]
fn add_limbs(a: &[u64; 4], b: &[u64; 4]) -> ([u64; 4], u64) {
    let mut r = [0u64; 4];
    let mut carry = 0;
    for i in 0..4 {
        let (v, c) = adc(a[i], b[i], carry);
        r[i] = v;
        carry = c;
    }
    (r, carry)
}

fn mont_mul(a: &[u64; 4], b: &[u64; 4]) -> [u64; 4] {
    let mut t = [0u64; 6];
    for i in 0..4 {
        let mut carry = 0;
        for j in 0..4 {
            let (lo, c) = mac(t[j], a[j], b[i], carry);
            t[j] = lo;
            carry = c;
        }
        let (lo, c) = adc(t[4], carry, 0);
        t[4] = lo;
        t[5] = c;

        let m = t[0].wrapping_mul(INV);
        let (_, mut carry) = mac(t[0], m, MODULUS[0], 0);
        for j in 1..4 {
            let (lo, c) = mac(t[j], m, MODULUS[j], carry);
            t[j - 1] = lo;
            carry = c;
        }
        let (lo, c) = adc(t[4], carry, 0);
        t[3] = lo;
        t[4] = t[5] + c;
        t[5] = 0;
    }
    let r = [t[0], t[1], t[2], t[3]];
    if t[4] != 0 || geq(&r, &MODULUS) {
        sub_limbs(&r, &MODULUS).0
    } else {
        r
    }
}

impl Fr {
    /// Builds an element from canonical little-endian limbs (must be < p).
    fn from_canonical(limbs: [u64; 4]) -> Self {
        debug_assert!(!geq(&limbs, &MODULUS));
        Fr(mont_mul(&limbs, &R2))
    }

    /// Canonical little-endian limbs.
    pub fn to_canonical(&self) -> [u64; 4] {
        mont_mul(&self.0, &[1, 0, 0, 0])
    }

    fn pow_limbs(&self, exp: &[u64; 4]) -> Self {
        let mut acc = Fr::one();
        for i in (0..4).rev() {
            for bit in (0..64).rev() {
                acc = acc * acc;
                if (exp[i] >> bit) & 1 == 1 {
                    acc *= *self;
                }
            }
        }
        acc
    }
}

impl Zero for Fr {
    fn zero() -> Self {
        Fr([0; 4])
    }
    fn is_zero(&self) -> bool {
        self.0 == [0; 4]
    }
}

impl One for Fr {
    fn one() -> Self {
        Fr(R)
    }
}

impl Add for Fr {
    type Output = Fr;
    #[inline]
    fn add(self, rhs: Fr) -> Fr {
        let (r, carry) = add_limbs(&self.0, &rhs.0);
        if carry != 0 || geq(&r, &MODULUS) {
            Fr(sub_limbs(&r, &MODULUS).0)
        } else {
            Fr(r)
        }
    }
}

impl Sub for Fr {
    type Output = Fr;
    #[inline]
    fn sub(self, rhs: Fr) -> Fr {
        let (r, borrow) = sub_limbs(&self.0, &rhs.0);
        if borrow != 0 {
            Fr(add_limbs(&r, &MODULUS).0)
        } else {
            Fr(r)
        }
    }
}

impl Mul for Fr {
    type Output = Fr;
    #[inline]
    fn mul(self, rhs: Fr) -> Fr {
        Fr(mont_mul(&self.0, &rhs.0))
    }
}

impl Neg for Fr {
    type Output = Fr;
    fn neg(self) -> Fr {
        Fr::zero() - self
    }
}

impl AddAssign for Fr {
    fn add_assign(&mut self, rhs: Fr) {
        *self = *self + rhs;
    }
}

impl SubAssign for Fr {
    fn sub_assign(&mut self, rhs: Fr) {
        *self = *self - rhs;
    }
}

impl MulAssign for Fr {
    fn mul_assign(&mut self, rhs: Fr) {
        *self = *self * rhs;
    }
}

impl Sum for Fr {
    fn sum<I: Iterator<Item = Fr>>(iter: I) -> Fr {
        iter.fold(Fr::zero(), |a, b| a + b)
    }
}

impl Product for Fr {
    fn product<I: Iterator<Item = Fr>>(iter: I) -> Fr {
        iter.fold(Fr::one(), |a, b| a * b)
    }
}

impl PartialOrd for Fr {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Orders by the canonical integer value.
impl Ord for Fr {
    fn cmp(&self, other: &Self) -> Ordering {
        let a = self.to_canonical();
        let b = other.to_canonical();
        for i in (0..4).rev() {
            match a[i].cmp(&b[i]) {
                Ordering::Equal => continue,
                o => return o,
            }
        }
        Ordering::Equal
    }
}

impl fmt::Display for Fr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        const CHUNK: u64 = 10_000_000_000_000_000_000;
        let mut limbs = self.to_canonical();
        let mut chunks = Vec::new();
        loop {
            // long division by 10^19
            let mut rem: u128 = 0;
            for i in (0..4).rev() {
                let cur = (rem << 64) | limbs[i] as u128;
                limbs[i] = (cur / CHUNK as u128) as u64;
                rem = cur % CHUNK as u128;
            }
            chunks.push(rem as u64);
            if limbs == [0; 4] {
                break;
            }
        }
        let mut s = chunks.last().unwrap().to_string();
        for c in chunks.iter().rev().skip(1) {
            s.push_str(&format!("{c:019}"));
        }
        f.pad(&s)
    }
}

impl fmt::Debug for Fr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Fr({self})")
    }
}

impl FromStr for Fr {
    type Err = Error;

    /// Parses a canonical decimal residue.
    fn from_str(s: &str) -> Result<Self, Error> {
        let bad = || Error::InvalidFieldElement(s.to_string());
        if s.is_empty() || !s.bytes().all(|b| b.is_ascii_digit()) {
            return Err(bad());
        }
        let mut limbs = [0u64; 4];
        for d in s.bytes() {
            let mut carry = (d - b'0') as u64;
            for limb in limbs.iter_mut() {
                let (lo, c) = mac(carry, *limb, 10, 0);
                *limb = lo;
                carry = c;
            }
            if carry != 0 {
                return Err(bad());
            }
        }
        if geq(&limbs, &MODULUS) {
            return Err(bad());
        }
        Ok(Fr::from_canonical(limbs))
    }
}

impl PrimeField for Fr {
    const MODULUS_DEC: &'static str =
        "21888242871839275222246405745257275088548364400416034343698204186575808495617";
    const MODULUS_HEX: &'static str =
        "0x30644e72e131a029b85045b68181585d2833e84879b9709143e1f593f0000001";
    const NUM_BITS: u32 = 254;

    fn from_u64(v: u64) -> Self {
        Fr::from_canonical([v, 0, 0, 0])
    }

    fn from_u128(v: u128) -> Self {
        Fr::from_canonical([v as u64, (v >> 64) as u64, 0, 0])
    }

    fn invert(&self) -> Option<Self> {
        if self.is_zero() {
            return None;
        }
        let (exp, _) = sub_limbs(&MODULUS, &[2, 0, 0, 0]);
        Some(self.pow_limbs(&exp))
    }

    fn to_le_bytes(&self) -> [u8; 32] {
        let limbs = self.to_canonical();
        let mut out = [0u8; 32];
        for (i, l) in limbs.iter().enumerate() {
            out[i * 8..i * 8 + 8].copy_from_slice(&l.to_le_bytes());
        }
        out
    }

    fn from_le_bytes(bytes: &[u8; 32]) -> Option<Self> {
        let limbs = bytes_to_limbs(bytes);
        if geq(&limbs, &MODULUS) {
            None
        } else {
            Some(Fr::from_canonical(limbs))
        }
    }

    fn from_bytes_reduced(bytes: &[u8; 32]) -> Self {
        let mut limbs = bytes_to_limbs(bytes);
        // 2^256 < 6p, so a handful of subtractions suffices
        while geq(&limbs, &MODULUS) {
            limbs = sub_limbs(&limbs, &MODULUS).0;
        }
        Fr::from_canonical(limbs)
    }
}

fn bytes_to_limbs(bytes: &[u8; 32]) -> [u64; 4] {
    let mut limbs = [0u64; 4];
    for (i, l) in limbs.iter_mut().enumerate() {
        let mut b = [0u8; 8];
        b.copy_from_slice(&bytes[i * 8..i * 8 + 8]);
        *l = u64::from_le_bytes(b);
    }
    limbs
}
