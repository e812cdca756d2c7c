//! Lesamnta-LW-256 and a SHA-1 baseline.
//!
//! Lesamnta-LW is a plain Merkle-Damgard hash. Its compression function runs
//! a 64-round block cipher with a 128-bit key and a 256-bit block:
//!
//! ```text
//! F(H, M) = E_{H[0..16]}(M || H[16..32])
//! ```
//!
//! The key schedule is a four-branch Feistel network over 32-bit words using
//! `Q = MixColumns . SubBytes` on a single AES column. The data path is a
//! four-branch Feistel network over 64-bit words using `G`, an AES round
//! (SubBytes, ShiftRows, MixColumns) on a 4x2 byte state.

use std::fmt;

use sha1::{Digest as _, Sha1};
use thiserror::Error;

use crate::cipher::{mix_column, SBOX};

pub const LLW_ROUNDS: usize = 64;
pub const LLW_BLOCK_BYTES: usize = 16;
pub const LLW_CHAIN_BYTES: usize = 32;

/// First 256 bits of the SHA-512 initial value.
pub const LLW_IV: [u8; 32] = [
    0x6a, 0x09, 0xe6, 0x67, 0xf3, 0xbc, 0xc9, 0x08, 0xbb, 0x67, 0xae, 0x85, 0x84, 0xca, 0xa7, 0x3b,
    0x3c, 0x6e, 0xf3, 0x72, 0xfe, 0x94, 0xf8, 0x2b, 0xa5, 0x4f, 0xf5, 0x3a, 0x5f, 0x1d, 0x36, 0xf1,
];

/// x^32 + x^22 + x^2 + x + 1 without the leading term.
const CONST_POLY: u32 = (1 << 22) | (1 << 2) | (1 << 1) | 1;

const fn round_constants() -> [u32; LLW_ROUNDS] {
    let mut out = [0u32; LLW_ROUNDS];
    let mut c = 1u32;
    let mut i = 0;
    while i < LLW_ROUNDS {
        out[i] = c;
        let carry = c >> 31;
        c <<= 1;
        if carry == 1 {
            c ^= CONST_POLY;
        }
        i += 1;
    }
    out
}

const ROUND_CONSTANTS: [u32; LLW_ROUNDS] = round_constants();

#[derive(Debug, Error, PartialEq, Eq)]
pub enum HashError {
    #[error("input of {bytes} bytes exceeds the 2^64-bit length limit")]
    LengthOverflow { bytes: u64 },
}

#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Digest256(pub [u8; 32]);

#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Digest160(pub [u8; 20]);

impl Digest256 {
    pub fn as_bytes(&self) -> &[u8; 32] {
        &self.0
    }
}

impl Digest160 {
    pub fn as_bytes(&self) -> &[u8; 20] {
        &self.0
    }
}

impl fmt::Debug for Digest256 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Digest256({})", hex::encode(self.0))
    }
}

impl fmt::Debug for Digest160 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Digest160({})", hex::encode(self.0))
    }
}

/// Digest selector shared by the signature layer and the benchmarks.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum HashAlg {
    Sha1,
    Llw256,
}

impl HashAlg {
    pub fn digest(self, data: &[u8]) -> Result<Vec<u8>, HashError> {
        match self {
            HashAlg::Sha1 => Ok(sha1_hash(data).0.to_vec()),
            HashAlg::Llw256 => Ok(llw_hash(data)?.0.to_vec()),
        }
    }

    pub fn output_len(self) -> usize {
        match self {
            HashAlg::Sha1 => 20,
            HashAlg::Llw256 => 32,
        }
    }
}

fn q_function(word: u32) -> u32 {
    let b = word.to_be_bytes();
    let col = [SBOX[b[0] as usize], SBOX[b[1] as usize], SBOX[b[2] as usize], SBOX[b[3] as usize]];
    u32::from_be_bytes(mix_column(col))
}

fn g_function(word: u64) -> u64 {
    let b = word.to_be_bytes().map(|x| SBOX[x as usize]);
    // column-major 4x2 state; ShiftRows over two columns swaps rows 1 and 3
    let left = [b[0], b[5], b[2], b[7]];
    let right = [b[4], b[1], b[6], b[3]];
    let mut out = [0u8; 8];
    out[..4].copy_from_slice(&mix_column(left));
    out[4..].copy_from_slice(&mix_column(right));
    u64::from_be_bytes(out)
}

/// The 256-bit block cipher under a 128-bit key.
fn encrypt_256(key: &[u8; 16], plaintext: &[u8; 32]) -> [u8; 32] {
    let mut k: [u32; 4] = core::array::from_fn(|i| u32::from_be_bytes(key[4 * i..4 * i + 4].try_into().unwrap()));
    let mut x: [u64; 4] =
        core::array::from_fn(|i| u64::from_be_bytes(plaintext[8 * i..8 * i + 8].try_into().unwrap()));
    for c in ROUND_CONSTANTS {
        let round_key = (u64::from(k[0]) << 32) | u64::from(k[1]);
        k = [k[1], k[2], k[3], k[0] ^ q_function(k[3] ^ c)];
        x = [x[1], x[2], x[3], x[0] ^ g_function(x[3] ^ round_key)];
    }
    let mut out = [0u8; 32];
    for (i, w) in x.iter().enumerate() {
        out[8 * i..8 * i + 8].copy_from_slice(&w.to_be_bytes());
    }
    out
}

/// Chaining value plus the pending partial block of a streaming computation.
#[derive(Clone)]
pub struct LlwState {
    chain: [u8; 32],
    message_block: [u8; 16],
    buffered: usize,
    total_bytes: u64,
}

impl Default for LlwState {
    fn default() -> Self {
        Self::new()
    }
}

impl LlwState {
    pub const ROUND_COUNT: usize = LLW_ROUNDS;

    pub fn new() -> Self {
        Self { chain: LLW_IV, message_block: [0; 16], buffered: 0, total_bytes: 0 }
    }

    pub fn update(&mut self, mut data: &[u8]) {
        self.total_bytes = self.total_bytes.wrapping_add(data.len() as u64);
        while !data.is_empty() {
            let take = (LLW_BLOCK_BYTES - self.buffered).min(data.len());
            self.message_block[self.buffered..self.buffered + take].copy_from_slice(&data[..take]);
            self.buffered += take;
            data = &data[take..];
            if self.buffered == LLW_BLOCK_BYTES {
                self.chain = llw_compress(&self.chain, &self.message_block);
                self.buffered = 0;
            }
        }
    }

    pub fn finalize(mut self) -> Result<Digest256, HashError> {
        let bits = bit_length(self.total_bytes)?;
        if self.buffered > 0 {
            self.message_block[self.buffered..].fill(0);
            self.chain = llw_compress(&self.chain, &self.message_block);
        }
        self.chain = llw_compress(&self.chain, &length_block(bits));
        Ok(Digest256(self.chain))
    }
}

fn bit_length(bytes: u64) -> Result<u64, HashError> {
    bytes.checked_mul(8).ok_or(HashError::LengthOverflow { bytes })
}

fn length_block(bits: u64) -> [u8; 16] {
    let mut block = [0u8; 16];
    block[..8].copy_from_slice(&bits.to_be_bytes());
    block
}

/// Splits `data` into zero-filled 128-bit blocks followed by a block that
/// carries only the 64-bit big-endian bit length.
pub fn llw_pad(data: &[u8]) -> Result<Vec<[u8; 16]>, HashError> {
    let bits = bit_length(data.len() as u64)?;
    let mut blocks: Vec<[u8; 16]> = data
        .chunks(LLW_BLOCK_BYTES)
        .map(|chunk| {
            let mut block = [0u8; 16];
            block[..chunk.len()].copy_from_slice(chunk);
            block
        })
        .collect();
    blocks.push(length_block(bits));
    Ok(blocks)
}

pub fn llw_compress(chain: &[u8; 32], block: &[u8; 16]) -> [u8; 32] {
    let key: [u8; 16] = chain[..16].try_into().unwrap();
    let mut plaintext = [0u8; 32];
    plaintext[..16].copy_from_slice(block);
    plaintext[16..].copy_from_slice(&chain[16..]);
    encrypt_256(&key, &plaintext)
}

pub fn llw_hash(data: &[u8]) -> Result<Digest256, HashError> {
    let mut state = LlwState::new();
    state.update(data);
    state.finalize()
}

/// Hash of the concatenation of `parts` without building it.
pub fn llw_hash_parts(parts: &[&[u8]]) -> Result<Digest256, HashError> {
    let mut state = LlwState::new();
    for p in parts {
        state.update(p);
    }
    state.finalize()
}

pub fn sha1_hash(data: &[u8]) -> Digest160 {
    let out = Sha1::digest(data);
    let mut d = [0u8; 20];
    d.copy_from_slice(&out);
    Digest160(d)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_input_pads_to_single_length_block() {
        let blocks = llw_pad(b"").unwrap();
        assert_eq!(blocks, vec![[0u8; 16]]);
    }

    #[test]
    fn full_block_gets_dedicated_length_block() {
        let data = [0xabu8; 16];
        let blocks = llw_pad(&data).unwrap();
        assert_eq!(blocks.len(), 2);
        assert_eq!(blocks[0], data);
        assert_eq!(&blocks[1][..8], &128u64.to_be_bytes());
        assert_eq!(&blocks[1][8..], &[0u8; 8]);
    }

    #[test]
    fn length_overflow_is_reported() {
        assert_eq!(bit_length(u64::MAX / 4), Err(HashError::LengthOverflow { bytes: u64::MAX / 4 }));
        assert_eq!(bit_length((1 << 61) - 1), Ok(((1u64 << 61) - 1) * 8));
        assert!(bit_length(1 << 61).is_err());
    }

    #[test]
    fn round_constants_walk_the_lfsr() {
        assert_eq!(ROUND_CONSTANTS[0], 1);
        assert_eq!(ROUND_CONSTANTS[31], 1 << 31);
        assert_eq!(ROUND_CONSTANTS[32], CONST_POLY);
        assert_eq!(LlwState::ROUND_COUNT, 64);
    }

    #[test]
    fn g_function_is_two_aes_columns() {
        // With zero input every S-box output is 0x63 and ShiftRows is a no-op
        // on a constant state; MixColumns of a constant column is the column.
        assert_eq!(g_function(0), 0x6363_6363_6363_6363);
        assert_eq!(q_function(0), 0x6363_6363);
    }

    #[test]
    fn streaming_matches_one_shot() {
        let data: Vec<u8> = (0..100u8).collect();
        let mut s = LlwState::new();
        s.update(&data[..7]);
        s.update(&data[7..40]);
        s.update(&data[40..]);
        assert_eq!(s.finalize().unwrap(), llw_hash(&data).unwrap());
        assert_eq!(llw_hash_parts(&[&data[..50], &data[50..]]).unwrap(), llw_hash(&data).unwrap());
    }

    #[test]
    fn sha1_standard_vectors() {
        assert_eq!(hex::encode(sha1_hash(b"abc").0), "a9993e364706816aba3e25717850c26c9cd0d89d");
        assert_eq!(hex::encode(sha1_hash(b"").0), "da39a3ee5e6b4b0d3255bfef95601890afd80709");
    }

    #[test]
    fn hash_alg_lengths() {
        assert_eq!(HashAlg::Sha1.digest(b"x").unwrap().len(), HashAlg::Sha1.output_len());
        assert_eq!(HashAlg::Llw256.digest(b"x").unwrap().len(), HashAlg::Llw256.output_len());
    }
}
