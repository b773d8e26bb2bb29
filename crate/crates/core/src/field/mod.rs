//! Prime-field scalars and the Fiat-Shamir transcript.
//!
//! Everything above this module is generic over [`PrimeField`]; the crate
//! root pins the concrete scalar to [`Fr`], the BN254 scalar field.

mod bn254;
mod transcript;

use std::fmt::{Debug, Display};
use std::hash::Hash;
use std::iter::{Product, Sum};
use std::ops::{Add, AddAssign, Mul, MulAssign, Neg, Sub, SubAssign};
use std::str::FromStr;

use num_traits::{One, Zero};

pub use bn254::Fr;
pub use transcript::{Transcript, HASH_ID};

/// A prime field large enough to hold sums, differences and 3x64-bit
/// composite keys of 64-bit data without wrapping.
pub trait PrimeField:
    Copy
    + Debug
    + Display
    + FromStr<Err = crate::Error>
    + Eq
    + Hash
    + Ord
    + Send
    + Sync
    + 'static
    + Zero
    + One
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Neg<Output = Self>
    + AddAssign
    + SubAssign
    + MulAssign
    + Sum
    + Product
{
    /// Modulus as a decimal string.
    const MODULUS_DEC: &'static str;
    /// Modulus as a `0x`-prefixed lowercase hex string.
    const MODULUS_HEX: &'static str;
    /// Bit length of the modulus.
    const NUM_BITS: u32;

    fn from_u64(v: u64) -> Self;

    fn from_u128(v: u128) -> Self {
        let hi = Self::from_u64((v >> 64) as u64);
        let lo = Self::from_u64(v as u64);
        hi * Self::from_u64(1 << 32) * Self::from_u64(1 << 32) + lo
    }

    /// `2^k` as a field element.
    fn pow2(k: u32) -> Self {
        let mut acc = Self::one();
        let two = Self::from_u64(2);
        for _ in 0..k {
            acc *= two;
        }
        acc
    }

    /// Multiplicative inverse, `None` for zero.
    fn invert(&self) -> Option<Self>;

    /// Canonical little-endian encoding of the residue.
    fn to_le_bytes(&self) -> [u8; 32];

    /// Parses a canonical little-endian residue; `None` if not below the modulus.
    fn from_le_bytes(bytes: &[u8; 32]) -> Option<Self>;

    /// Interprets 32 bytes as a little-endian 256-bit integer and reduces it.
    fn from_bytes_reduced(bytes: &[u8; 32]) -> Self;

    /// The residue as an integer, if it fits in 128 bits.
    fn to_u128(&self) -> Option<u128> {
        let b = self.to_le_bytes();
        if b[16..].iter().any(|&x| x != 0) {
            return None;
        }
        let mut lo = [0u8; 16];
        lo.copy_from_slice(&b[..16]);
        Some(u128::from_le_bytes(lo))
    }

    fn to_u64(&self) -> Option<u64> {
        self.to_u128().and_then(|v| u64::try_from(v).ok())
    }
}

/// Raises `base` to a small exponent.
pub fn pow<F: PrimeField>(base: F, mut exp: u64) -> F {
    let mut acc = F::one();
    let mut b = base;
    while exp > 0 {
        if exp & 1 == 1 {
            acc *= b;
        }
        b *= b;
        exp >>= 1;
    }
    acc
}

/// Inverts every nonzero element in place with one field inversion.
/// Zero entries are left as zero.
pub fn batch_invert<F: PrimeField>(values: &mut [F]) {
    let mut prefix = Vec::with_capacity(values.len());
    let mut acc = F::one();
    for v in values.iter() {
        prefix.push(acc);
        if !v.is_zero() {
            acc *= *v;
        }
    }
    let mut inv = acc.invert().expect("product of nonzero elements");
    for (v, p) in values.iter_mut().zip(prefix).rev() {
        if v.is_zero() {
            continue;
        }
        let next = inv * *v;
        *v = inv * p;
        inv = next;
    }
}
