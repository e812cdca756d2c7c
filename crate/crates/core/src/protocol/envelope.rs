use std::fmt;

use thiserror::Error;

use crate::atoms::{expand_to, xor_cyclic, xor_in_place, EntityId, Nonce, SecValue, Timestamp, TokenTar};
use crate::cipher::{apply_keystream, expand_key, AesKey192, RoundConfig};
use crate::sign::SIGNATURE_BYTES;

/// Wire header: leg tag, sender id, IV, ciphertext length.
pub const HEADER_BYTES: usize = 1 + 16 + 16 + 4;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[repr(u8)]
pub enum Leg {
    RSen1 = 1,
    RBs2 = 2,
    RIs2 = 3,
    RRs2 = 4,
    RIs3 = 5,
    RBs3 = 6,
}

impl Leg {
    pub const ALL: [Leg; 6] = [Leg::RSen1, Leg::RBs2, Leg::RIs2, Leg::RRs2, Leg::RIs3, Leg::RBs3];

    pub fn from_tag(tag: u8) -> Option<Leg> {
        Leg::ALL.into_iter().find(|l| *l as u8 == tag)
    }

    pub fn is_response(self) -> bool {
        matches!(self, Leg::RRs2 | Leg::RIs3 | Leg::RBs3)
    }

    pub fn name(self) -> &'static str {
        match self {
            Leg::RSen1 => "R_Sen1",
            Leg::RBs2 => "R_BS2",
            Leg::RIs2 => "R_IS2",
            Leg::RRs2 => "R_RS2",
            Leg::RIs3 => "R_IS3",
            Leg::RBs3 => "R_BS3",
        }
    }
}

impl fmt::Display for Leg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum EnvelopeError {
    #[error("envelope shorter than its {HEADER_BYTES}-byte header")]
    ShortHeader,
    #[error("unknown leg tag {0}")]
    UnknownLeg(u8),
    #[error("declared ciphertext length {declared} but {actual} bytes follow")]
    Length { declared: usize, actual: usize },
}

#[derive(Clone, PartialEq, Eq)]
pub struct Envelope {
    pub leg: Leg,
    pub sender: EntityId,
    pub iv: [u8; 16],
    pub ciphertext: Vec<u8>,
}

impl fmt::Debug for Envelope {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Envelope")
            .field("leg", &self.leg)
            .field("sender", &self.sender)
            .field("len", &self.ciphertext.len())
            .finish()
    }
}

impl Envelope {
    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(HEADER_BYTES + self.ciphertext.len());
        out.push(self.leg as u8);
        out.extend_from_slice(&self.sender.0);
        out.extend_from_slice(&self.iv);
        out.extend_from_slice(&(self.ciphertext.len() as u32).to_be_bytes());
        out.extend_from_slice(&self.ciphertext);
        out
    }

    pub fn decode(bytes: &[u8]) -> Result<Envelope, EnvelopeError> {
        if bytes.len() < HEADER_BYTES {
            return Err(EnvelopeError::ShortHeader);
        }
        let leg = Leg::from_tag(bytes[0]).ok_or(EnvelopeError::UnknownLeg(bytes[0]))?;
        let sender = EntityId(bytes[1..17].try_into().unwrap());
        let iv: [u8; 16] = bytes[17..33].try_into().unwrap();
        let declared = u32::from_be_bytes(bytes[33..37].try_into().unwrap()) as usize;
        let body = &bytes[HEADER_BYTES..];
        if body.len() != declared {
            return Err(EnvelopeError::Length { declared, actual: body.len() });
        }
        Ok(Envelope { leg, sender, iv, ciphertext: body.to_vec() })
    }

    pub fn wire_len(&self) -> usize {
        HEADER_BYTES + self.ciphertext.len()
    }
}

/// Encrypts under the hop key, then masks with the recipient id.
pub fn seal(
    leg: Leg,
    sender: EntityId,
    recipient: &EntityId,
    key: &AesKey192,
    rounds: RoundConfig,
    iv: [u8; 16],
    plaintext: &[u8],
) -> Envelope {
    let mut ciphertext = apply_keystream(plaintext, &expand_key(key, rounds), &iv);
    xor_cyclic(&mut ciphertext, &recipient.0);
    Envelope { leg, sender, iv, ciphertext }
}

/// Inverse of [`seal`] as seen by `recipient`.
pub fn open(env: &Envelope, recipient: &EntityId, key: &AesKey192, rounds: RoundConfig) -> Vec<u8> {
    let mut body = env.ciphertext.clone();
    xor_cyclic(&mut body, &recipient.0);
    apply_keystream(&body, &expand_key(key, rounds), &env.iv)
}

/// `T_AR || (N ^ TS||TS) || TS || responder_id`.
pub const RESPONSE_PLAINTEXT_BYTES: usize = 64 + 16 + 8 + 16;

/// `sig ^ expand(N) ^ expand(Sec)`.
pub fn token_tar(sig_bits: &[u8; SIGNATURE_BYTES], nonce: &Nonce, sec: &SecValue) -> TokenTar {
    let mut t = *sig_bits;
    xor_in_place(&mut t, &expand_to::<64>(&nonce.0).unwrap());
    xor_in_place(&mut t, &expand_to::<64>(&sec.0).unwrap());
    TokenTar(t)
}

fn nonce_mask(ts: Timestamp) -> [u8; 16] {
    expand_to::<16>(&ts.to_bytes()).unwrap()
}

pub fn response_plaintext(t_ar: &TokenTar, nonce: &Nonce, ts: Timestamp, responder: &EntityId) -> Vec<u8> {
    let mut masked = nonce.0;
    xor_in_place(&mut masked, &nonce_mask(ts));
    let mut out = Vec::with_capacity(RESPONSE_PLAINTEXT_BYTES);
    out.extend_from_slice(&t_ar.0);
    out.extend_from_slice(&masked);
    out.extend_from_slice(&ts.to_bytes());
    out.extend_from_slice(&responder.0);
    out
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ResponseFields {
    pub t_ar: TokenTar,
    pub nonce: Nonce,
    pub ts: Timestamp,
    pub responder: EntityId,
}

pub fn parse_response(plain: &[u8]) -> Option<ResponseFields> {
    if plain.len() != RESPONSE_PLAINTEXT_BYTES {
        return None;
    }
    let ts = Timestamp::from_bytes(plain[80..88].try_into().unwrap());
    let mut nonce: [u8; 16] = plain[64..80].try_into().unwrap();
    xor_in_place(&mut nonce, &nonce_mask(ts));
    Some(ResponseFields {
        t_ar: TokenTar(plain[..64].try_into().unwrap()),
        nonce: Nonce(nonce),
        ts,
        responder: EntityId(plain[88..104].try_into().unwrap()),
    })
}

/// `T_AR ^ sig ^ expand(N)`, accepted only if it is a clean 4x repetition of
/// a 128-bit value.
pub fn recover_sec(t_ar: &TokenTar, sig_bits: &[u8; SIGNATURE_BYTES], nonce: &Nonce) -> Option<SecValue> {
    let mut residue = t_ar.0;
    xor_in_place(&mut residue, sig_bits);
    xor_in_place(&mut residue, &expand_to::<64>(&nonce.0).unwrap());
    let first: [u8; 16] = residue[..16].try_into().unwrap();
    residue.chunks_exact(16).all(|c| c == first).then_some(SecValue(first))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn envelope_wire_layout() {
        let env = Envelope { leg: Leg::RIs2, sender: EntityId([3; 16]), iv: [4; 16], ciphertext: vec![9; 5] };
        let bytes = env.encode();
        assert_eq!(bytes.len(), HEADER_BYTES + 5);
        assert_eq!(bytes[0], 3);
        assert_eq!(&bytes[33..37], &[0, 0, 0, 5]);
        assert_eq!(Envelope::decode(&bytes).unwrap(), env);
        assert_eq!(Envelope::decode(&bytes[..10]), Err(EnvelopeError::ShortHeader));
        assert_eq!(Envelope::decode(&bytes[..40]), Err(EnvelopeError::Length { declared: 5, actual: 3 }));
        let mut bad = bytes.clone();
        bad[0] = 9;
        assert_eq!(Envelope::decode(&bad), Err(EnvelopeError::UnknownLeg(9)));
    }

    #[test]
    fn seal_open_roundtrip() {
        let key = AesKey192::new([1; 24]);
        let rcpt = EntityId([0x42; 16]);
        let msg = b"plaintext of arbitrary length....".to_vec();
        let env = seal(Leg::RSen1, EntityId([1; 16]), &rcpt, &key, RoundConfig::Ten, [7; 16], &msg);
        assert_eq!(open(&env, &rcpt, &key, RoundConfig::Ten), msg);
        assert_ne!(open(&env, &EntityId([0x43; 16]), &key, RoundConfig::Ten), msg);
    }

    #[test]
    fn token_unmasks_to_sec() {
        let sig = [0x11u8; 64];
        let nonce = Nonce([0x22; 16]);
        let sec = SecValue([0x33; 16]);
        let t = token_tar(&sig, &nonce, &sec);
        assert_eq!(recover_sec(&t, &sig, &nonce), Some(sec));
        let plain = response_plaintext(&t, &nonce, Timestamp(99), &EntityId([5; 16]));
        let fields = parse_response(&plain).unwrap();
        assert_eq!(fields.nonce, nonce);
        assert_eq!(fields.ts, Timestamp(99));
    }

    #[test]
    fn omitting_the_nonce_breaks_recovery() {
        let sig = [0x5au8; 64];
        let nonce = Nonce(core::array::from_fn(|i| i as u8 * 7 + 1));
        let sec = SecValue([0x33; 16]);
        let t = token_tar(&sig, &nonce, &sec);
        assert_ne!(recover_sec(&t, &sig, &Nonce([0; 16])), Some(sec));
        let mut plain = response_plaintext(&t, &nonce, Timestamp(1), &EntityId([5; 16]));
        plain.drain(64..80);
        assert!(parse_response(&plain).is_none());
    }
}
