//! Fixed-width protocol atoms and the cyclic XOR expansion.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum WidthError {
    #[error("operand of {got} bytes does not fit target width {target}")]
    TooWide { got: usize, target: usize },
    #[error("cannot expand an empty operand")]
    Empty,
    #[error("expected {expected} bytes, got {got}")]
    Exact { expected: usize, got: usize },
    #[error("invalid hex: {0}")]
    Hex(String),
}

macro_rules! fixed_bytes {
    ($(#[$meta:meta])* $name:ident, $len:expr) => {
        $(#[$meta])*
        #[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
        pub struct $name(pub [u8; $len]);

        impl $name {
            pub const LEN: usize = $len;

            pub fn from_slice(bytes: &[u8]) -> Result<Self, WidthError> {
                let arr: [u8; $len] = bytes
                    .try_into()
                    .map_err(|_| WidthError::Exact { expected: $len, got: bytes.len() })?;
                Ok(Self(arr))
            }

            pub fn as_bytes(&self) -> &[u8; $len] {
                &self.0
            }

            pub fn to_hex(&self) -> String {
                hex::encode(self.0)
            }

            pub fn from_hex(s: &str) -> Result<Self, WidthError> {
                let raw = hex::decode(s.trim()).map_err(|e| WidthError::Hex(e.to_string()))?;
                Self::from_slice(&raw)
            }
        }

        impl fmt::Debug for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, "{}({})", stringify!($name), hex::encode(self.0))
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(&hex::encode(self.0))
            }
        }

        impl FromStr for $name {
            type Err = WidthError;

            fn from_str(s: &str) -> Result<Self, Self::Err> {
                Self::from_hex(s)
            }
        }

        impl Serialize for $name {
            fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
                s.serialize_str(&self.to_hex())
            }
        }

        impl<'de> Deserialize<'de> for $name {
            fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
                let s = String::deserialize(d)?;
                Self::from_hex(&s).map_err(serde::de::Error::custom)
            }
        }
    };
}

fixed_bytes!(
    /// 128-bit entity identifier.
    EntityId, 16
);
fixed_bytes!(
    /// 128-bit per-message nonce.
    Nonce, 16
);
fixed_bytes!(
    /// `Sen_ID ^ BS_ID ^ IS_ID ^ RS_ID`.
    SecValue, 16
);
fixed_bytes!(
    /// Signature masked with a recipient id and a timestamp.
    Vtm, 64
);
fixed_bytes!(
    /// Token-accept-request: signature ^ nonce ^ Sec, all expanded to 512 bits.
    TokenTar, 64
);
fixed_bytes!(RequestId, 16);

impl SecValue {
    pub fn of(ids: &[EntityId]) -> Self {
        let mut acc = [0u8; 16];
        for id in ids {
            xor_in_place(&mut acc, &id.0);
        }
        SecValue(acc)
    }
}

/// Milliseconds on the simulated clock.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize)]
pub struct Timestamp(pub u64);

impl Timestamp {
    pub const LEN: usize = 8;

    pub fn to_bytes(self) -> [u8; 8] {
        self.0.to_be_bytes()
    }

    pub fn from_bytes(b: [u8; 8]) -> Self {
        Timestamp(u64::from_be_bytes(b))
    }

    pub fn abs_diff(self, other: Timestamp) -> u64 {
        self.0.abs_diff(other.0)
    }
}

/// Repeats `value` cyclically until it is `target` bytes long.
pub fn expand(value: &[u8], target: usize) -> Result<Vec<u8>, WidthError> {
    if value.is_empty() {
        return Err(WidthError::Empty);
    }
    if value.len() > target {
        return Err(WidthError::TooWide { got: value.len(), target });
    }
    Ok(value.iter().copied().cycle().take(target).collect())
}

pub fn expand_to<const N: usize>(value: &[u8]) -> Result<[u8; N], WidthError> {
    let v = expand(value, N)?;
    Ok(v.try_into().expect("expand returns the target width"))
}

pub fn xor_in_place(dst: &mut [u8], src: &[u8]) {
    debug_assert_eq!(dst.len(), src.len());
    for (d, s) in dst.iter_mut().zip(src) {
        *d ^= s;
    }
}

/// XOR with `key` repeated cyclically over the whole buffer.
pub fn xor_cyclic(data: &mut [u8], key: &[u8]) {
    for (d, k) in data.iter_mut().zip(key.iter().cycle()) {
        *d ^= k;
    }
}
