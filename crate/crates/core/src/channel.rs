//! Ideal adder channel seen by a receiver running physical-layer network
//! coding.
//!
//! Signature symbols arrive as integer column sums and payload symbols as
//! column sums modulo `q`. Noise, lattice decoding and the lift from `F_q`
//! sums to integer sums are assumed perfect and are not modelled.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::signature_code::{ColumnSums, SignatureWord};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ChannelError {
    #[error("signature has {got} symbols, channel expects {expected}")]
    SignatureLength { expected: usize, got: usize },
    #[error("payload has {got} symbols, channel expects {expected}")]
    PayloadLength { expected: usize, got: usize },
    #[error("payload symbol {symbol} is not below q = {q}")]
    SymbolRange { symbol: u64, q: u64 },
}

/// What one user puts on the air in a slot: signature followed by payload.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UserWord {
    pub signature: SignatureWord,
    pub data: Vec<u64>,
}

/// What the receiver learns from one slot.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SlotObservation {
    pub sig_sums: ColumnSums,
    pub data_sum: Vec<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AdderChannel {
    q: u64,
    sig_len: usize,
    data_len: usize,
}

impl AdderChannel {
    pub fn new(q: u64, sig_len: usize, data_len: usize) -> Self {
        Self {
            q,
            sig_len,
            data_len,
        }
    }

    pub fn q(&self) -> u64 {
        self.q
    }

    pub fn sig_len(&self) -> usize {
        self.sig_len
    }

    pub fn data_len(&self) -> usize {
        self.data_len
    }

    /// Superimposes the words sent in one slot. An empty slot yields the
    /// all-zero observation.
    pub fn transmit_slot<'a, I>(&self, words: I) -> Result<SlotObservation, ChannelError>
    where
        I: IntoIterator<Item = &'a UserWord>,
    {
        let mut sig_sums = ColumnSums::zero(self.sig_len);
        let mut data_sum = vec![0u64; self.data_len];
        for w in words {
            if w.signature.len() != self.sig_len {
                return Err(ChannelError::SignatureLength {
                    expected: self.sig_len,
                    got: w.signature.len(),
                });
            }
            if w.data.len() != self.data_len {
                return Err(ChannelError::PayloadLength {
                    expected: self.data_len,
                    got: w.data.len(),
                });
            }
            sig_sums.add(&w.signature);
            for (acc, &d) in data_sum.iter_mut().zip(&w.data) {
                if d >= self.q {
                    return Err(ChannelError::SymbolRange {
                        symbol: d,
                        q: self.q,
                    });
                }
                *acc = (*acc + d) % self.q;
            }
        }
        Ok(SlotObservation { sig_sums, data_sum })
    }

    pub fn subtract_data(&self, sum: &[u64], known: &[u64]) -> Result<Vec<u64>, ChannelError> {
        subtract_data(self.q, sum, known)
    }
}

/// Coordinate-wise `(sum - known) mod q`.
pub fn subtract_data(q: u64, sum: &[u64], known: &[u64]) -> Result<Vec<u64>, ChannelError> {
    if sum.len() != known.len() {
        return Err(ChannelError::PayloadLength {
            expected: sum.len(),
            got: known.len(),
        });
    }
    Ok(sum
        .iter()
        .zip(known)
        .map(|(&s, &k)| (s % q + q - k % q) % q)
        .collect())
}
