use std::marker::PhantomData;

use sha2::{Digest, Sha256};

use super::PrimeField;

/// Identifier of the transcript hash, reported by `--field-info`.
pub const HASH_ID: &str = "sha256";

/// Deterministic Fiat-Shamir transcript over SHA-256.
///
/// Every absorption is length-prefixed, so `absorb(b"ab")` and
/// `absorb(b"a"); absorb(b"b")` lead to different states.
#[derive(Clone, Debug)]
pub struct Transcript<F> {
    state: [u8; 32],
    counter: u64,
    _field: PhantomData<F>,
}

impl<F: PrimeField> Transcript<F> {
    pub fn new(domain: &[u8]) -> Self {
        let mut t = Transcript {
            state: [0u8; 32],
            counter: 0,
            _field: PhantomData,
        };
        t.absorb(b"domain", domain);
        t
    }

    pub fn absorb(&mut self, label: &[u8], data: &[u8]) {
        let mut h = Sha256::new();
        h.update(b"absorb");
        h.update(self.state);
        h.update((label.len() as u64).to_be_bytes());
        h.update(label);
        h.update((data.len() as u64).to_be_bytes());
        h.update(data);
        self.state = h.finalize().into();
    }

    pub fn absorb_field(&mut self, label: &[u8], value: F) {
        self.absorb(label, &value.to_le_bytes());
    }

    /// Absorbs `label`, then squeezes one field element.
    pub fn challenge(&mut self, label: &[u8]) -> F {
        let mut h = Sha256::new();
        h.update(b"squeeze");
        h.update(self.state);
        h.update(self.counter.to_be_bytes());
        h.update((label.len() as u64).to_be_bytes());
        h.update(label);
        let out: [u8; 32] = h.finalize().into();
        self.state = out;
        self.counter += 1;
        F::from_bytes_reduced(&out)
    }

    pub fn counter(&self) -> u64 {
        self.counter
    }
}
