//! Rijndael with 192-bit keys and a selectable round count.
//!
//! Twelve rounds is standard AES-192. Ten rounds keeps the same key schedule
//! truncated to eleven round keys and exists as a speed knob. Arbitrary-length
//! payloads go through counter mode with an explicit 16-byte IV.

use std::fmt;

use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CipherError {
    #[error("key must be 24 bytes, got {0}")]
    KeyLength(usize),
    #[error("unsupported round count {0} (expected 10 or 12)")]
    Rounds(u32),
}

pub(crate) const SBOX: [u8; 256] = [
    0x63, 0x7c, 0x77, 0x7b, 0xf2, 0x6b, 0x6f, 0xc5, 0x30, 0x01, 0x67, 0x2b, 0xfe, 0xd7, 0xab, 0x76,
    0xca, 0x82, 0xc9, 0x7d, 0xfa, 0x59, 0x47, 0xf0, 0xad, 0xd4, 0xa2, 0xaf, 0x9c, 0xa4, 0x72, 0xc0,
    0xb7, 0xfd, 0x93, 0x26, 0x36, 0x3f, 0xf7, 0xcc, 0x34, 0xa5, 0xe5, 0xf1, 0x71, 0xd8, 0x31, 0x15,
    0x04, 0xc7, 0x23, 0xc3, 0x18, 0x96, 0x05, 0x9a, 0x07, 0x12, 0x80, 0xe2, 0xeb, 0x27, 0xb2, 0x75,
    0x09, 0x83, 0x2c, 0x1a, 0x1b, 0x6e, 0x5a, 0xa0, 0x52, 0x3b, 0xd6, 0xb3, 0x29, 0xe3, 0x2f, 0x84,
    0x53, 0xd1, 0x00, 0xed, 0x20, 0xfc, 0xb1, 0x5b, 0x6a, 0xcb, 0xbe, 0x39, 0x4a, 0x4c, 0x58, 0xcf,
    0xd0, 0xef, 0xaa, 0xfb, 0x43, 0x4d, 0x33, 0x85, 0x45, 0xf9, 0x02, 0x7f, 0x50, 0x3c, 0x9f, 0xa8,
    0x51, 0xa3, 0x40, 0x8f, 0x92, 0x9d, 0x38, 0xf5, 0xbc, 0xb6, 0xda, 0x21, 0x10, 0xff, 0xf3, 0xd2,
    0xcd, 0x0c, 0x13, 0xec, 0x5f, 0x97, 0x44, 0x17, 0xc4, 0xa7, 0x7e, 0x3d, 0x64, 0x5d, 0x19, 0x73,
    0x60, 0x81, 0x4f, 0xdc, 0x22, 0x2a, 0x90, 0x88, 0x46, 0xee, 0xb8, 0x14, 0xde, 0x5e, 0x0b, 0xdb,
    0xe0, 0x32, 0x3a, 0x0a, 0x49, 0x06, 0x24, 0x5c, 0xc2, 0xd3, 0xac, 0x62, 0x91, 0x95, 0xe4, 0x79,
    0xe7, 0xc8, 0x37, 0x6d, 0x8d, 0xd5, 0x4e, 0xa9, 0x6c, 0x56, 0xf4, 0xea, 0x65, 0x7a, 0xae, 0x08,
    0xba, 0x78, 0x25, 0x2e, 0x1c, 0xa6, 0xb4, 0xc6, 0xe8, 0xdd, 0x74, 0x1f, 0x4b, 0xbd, 0x8b, 0x8a,
    0x70, 0x3e, 0xb5, 0x66, 0x48, 0x03, 0xf6, 0x0e, 0x61, 0x35, 0x57, 0xb9, 0x86, 0xc1, 0x1d, 0x9e,
    0xe1, 0xf8, 0x98, 0x11, 0x69, 0xd9, 0x8e, 0x94, 0x9b, 0x1e, 0x87, 0xe9, 0xce, 0x55, 0x28, 0xdf,
    0x8c, 0xa1, 0x89, 0x0d, 0xbf, 0xe6, 0x42, 0x68, 0x41, 0x99, 0x2d, 0x0f, 0xb0, 0x54, 0xbb, 0x16,
];

const fn invert_sbox(sbox: &[u8; 256]) -> [u8; 256] {
    let mut inv = [0u8; 256];
    let mut i = 0;
    while i < 256 {
        inv[sbox[i] as usize] = i as u8;
        i += 1;
    }
    inv
}

const INV_SBOX: [u8; 256] = invert_sbox(&SBOX);

#[inline]
pub(crate) fn xtime(b: u8) -> u8 {
    (b << 1) ^ if b & 0x80 != 0 { 0x1b } else { 0 }
}

/// Multiplication in GF(2^8) modulo x^8 + x^4 + x^3 + x + 1.
pub(crate) fn gf_mul(mut a: u8, mut b: u8) -> u8 {
    let mut acc = 0;
    while b != 0 {
        if b & 1 != 0 {
            acc ^= a;
        }
        a = xtime(a);
        b >>= 1;
    }
    acc
}

/// The AES MDS matrix applied to one 4-byte column.
pub(crate) fn mix_column(col: [u8; 4]) -> [u8; 4] {
    let [a0, a1, a2, a3] = col;
    let t = a0 ^ a1 ^ a2 ^ a3;
    [
        a0 ^ t ^ xtime(a0 ^ a1),
        a1 ^ t ^ xtime(a1 ^ a2),
        a2 ^ t ^ xtime(a2 ^ a3),
        a3 ^ t ^ xtime(a3 ^ a0),
    ]
}

fn inv_mix_column(col: [u8; 4]) -> [u8; 4] {
    let [a0, a1, a2, a3] = col;
    [
        gf_mul(a0, 14) ^ gf_mul(a1, 11) ^ gf_mul(a2, 13) ^ gf_mul(a3, 9),
        gf_mul(a0, 9) ^ gf_mul(a1, 14) ^ gf_mul(a2, 11) ^ gf_mul(a3, 13),
        gf_mul(a0, 13) ^ gf_mul(a1, 9) ^ gf_mul(a2, 14) ^ gf_mul(a3, 11),
        gf_mul(a0, 11) ^ gf_mul(a1, 13) ^ gf_mul(a2, 9) ^ gf_mul(a3, 14),
    ]
}

#[derive(Clone, PartialEq, Eq)]
pub struct AesKey192([u8; 24]);

impl AesKey192 {
    pub fn new(bytes: [u8; 24]) -> Self {
        Self(bytes)
    }

    pub fn from_slice(bytes: &[u8]) -> Result<Self, CipherError> {
        let arr: [u8; 24] = bytes.try_into().map_err(|_| CipherError::KeyLength(bytes.len()))?;
        Ok(Self(arr))
    }

    pub fn as_bytes(&self) -> &[u8; 24] {
        &self.0
    }
}

impl fmt::Debug for AesKey192 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("AesKey192(..)")
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default)]
pub enum RoundConfig {
    #[default]
    Ten,
    Twelve,
}

impl RoundConfig {
    pub fn rounds(self) -> usize {
        match self {
            RoundConfig::Ten => 10,
            RoundConfig::Twelve => 12,
        }
    }
}

impl TryFrom<u32> for RoundConfig {
    type Error = CipherError;

    fn try_from(rounds: u32) -> Result<Self, Self::Error> {
        match rounds {
            10 => Ok(RoundConfig::Ten),
            12 => Ok(RoundConfig::Twelve),
            other => Err(CipherError::Rounds(other)),
        }
    }
}

/// 4x4 byte state, stored column-major as in FIPS-197 (`bytes[4 * c + r]`).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct StateArray([u8; 16]);

impl StateArray {
    pub fn from_bytes(bytes: [u8; 16]) -> Self {
        Self(bytes)
    }

    pub fn to_bytes(self) -> [u8; 16] {
        self.0
    }

    pub fn sub_bytes(&mut self) {
        for b in &mut self.0 {
            *b = SBOX[*b as usize];
        }
    }

    pub fn inv_sub_bytes(&mut self) {
        for b in &mut self.0 {
            *b = INV_SBOX[*b as usize];
        }
    }

    pub fn shift_rows(&mut self) {
        let s = self.0;
        for r in 1..4 {
            for c in 0..4 {
                self.0[4 * c + r] = s[4 * ((c + r) % 4) + r];
            }
        }
    }

    pub fn inv_shift_rows(&mut self) {
        let s = self.0;
        for r in 1..4 {
            for c in 0..4 {
                self.0[4 * ((c + r) % 4) + r] = s[4 * c + r];
            }
        }
    }

    pub fn mix_columns(&mut self) {
        for c in 0..4 {
            let col = [self.0[4 * c], self.0[4 * c + 1], self.0[4 * c + 2], self.0[4 * c + 3]];
            self.0[4 * c..4 * c + 4].copy_from_slice(&mix_column(col));
        }
    }

    pub fn inv_mix_columns(&mut self) {
        for c in 0..4 {
            let col = [self.0[4 * c], self.0[4 * c + 1], self.0[4 * c + 2], self.0[4 * c + 3]];
            self.0[4 * c..4 * c + 4].copy_from_slice(&inv_mix_column(col));
        }
    }

    pub fn add_round_key(&mut self, key: &[u8; 16]) {
        for (b, k) in self.0.iter_mut().zip(key) {
            *b ^= k;
        }
    }
}

#[derive(Clone, PartialEq, Eq)]
pub struct KeySchedule {
    round_keys: Vec<[u8; 16]>,
}

impl KeySchedule {
    pub fn rounds(&self) -> usize {
        self.round_keys.len() - 1
    }

    pub fn round_keys(&self) -> &[[u8; 16]] {
        &self.round_keys
    }
}

impl fmt::Debug for KeySchedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("KeySchedule").field("rounds", &self.rounds()).finish()
    }
}

const NK: usize = 6;

/// Standard Rijndael expansion for Nk = 6, producing `rounds + 1` round keys.
pub fn expand_key(key: &AesKey192, cfg: RoundConfig) -> KeySchedule {
    let total_words = 4 * (cfg.rounds() + 1);
    let mut words: Vec<[u8; 4]> = Vec::with_capacity(total_words);
    for chunk in key.0.chunks_exact(4) {
        words.push([chunk[0], chunk[1], chunk[2], chunk[3]]);
    }
    let mut rcon = 1u8;
    for i in NK..total_words {
        let mut temp = words[i - 1];
        if i % NK == 0 {
            temp.rotate_left(1);
            for b in &mut temp {
                *b = SBOX[*b as usize];
            }
            temp[0] ^= rcon;
            rcon = xtime(rcon);
        }
        let prev = words[i - NK];
        words.push([prev[0] ^ temp[0], prev[1] ^ temp[1], prev[2] ^ temp[2], prev[3] ^ temp[3]]);
    }
    let round_keys = words
        .chunks_exact(4)
        .map(|w| {
            let mut rk = [0u8; 16];
            for (i, word) in w.iter().enumerate() {
                rk[4 * i..4 * i + 4].copy_from_slice(word);
            }
            rk
        })
        .collect();
    KeySchedule { round_keys }
}

pub fn encrypt_block(block: &[u8; 16], schedule: &KeySchedule) -> [u8; 16] {
    let rks = &schedule.round_keys;
    let last = rks.len() - 1;
    let mut state = StateArray(*block);
    state.add_round_key(&rks[0]);
    for rk in &rks[1..last] {
        state.sub_bytes();
        state.shift_rows();
        state.mix_columns();
        state.add_round_key(rk);
    }
    state.sub_bytes();
    state.shift_rows();
    state.add_round_key(&rks[last]);
    state.0
}

pub fn decrypt_block(block: &[u8; 16], schedule: &KeySchedule) -> [u8; 16] {
    let rks = &schedule.round_keys;
    let last = rks.len() - 1;
    let mut state = StateArray(*block);
    state.add_round_key(&rks[last]);
    state.inv_shift_rows();
    state.inv_sub_bytes();
    for rk in rks[1..last].iter().rev() {
        state.add_round_key(rk);
        state.inv_mix_columns();
        state.inv_shift_rows();
        state.inv_sub_bytes();
    }
    state.add_round_key(&rks[0]);
    state.0
}

/// Counter mode: keystream block `i` is `E(iv + i)` with the IV read as a
/// 128-bit big-endian integer (wrapping).
pub fn apply_keystream(data: &[u8], schedule: &KeySchedule, iv: &[u8; 16]) -> Vec<u8> {
    let base = u128::from_be_bytes(*iv);
    data.chunks(16)
        .enumerate()
        .flat_map(|(i, chunk)| {
            let counter = base.wrapping_add(i as u128).to_be_bytes();
            let ks = encrypt_block(&counter, schedule);
            chunk.iter().zip(ks).map(|(d, k)| d ^ k).collect::<Vec<_>>()
        })
        .collect()
}

pub fn encrypt_payload(data: &[u8], key: &AesKey192, cfg: RoundConfig, iv: &[u8; 16]) -> Vec<u8> {
    apply_keystream(data, &expand_key(key, cfg), iv)
}

pub fn decrypt_payload(data: &[u8], key: &AesKey192, cfg: RoundConfig, iv: &[u8; 16]) -> Vec<u8> {
    apply_keystream(data, &expand_key(key, cfg), iv)
}
