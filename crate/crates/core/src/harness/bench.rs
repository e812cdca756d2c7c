//! Wall-clock timings of the primitives the protocol is built from.

use std::hint::black_box;
use std::time::Instant;

use clap::ValueEnum;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::cipher::{apply_keystream, expand_key, AesKey192, RoundConfig};
use crate::hash::{llw_hash, sha1_hash, HashAlg};
use crate::sign::{keygen, sign, CurveParams};

pub const WARMUP: usize = 10;
pub const MIN_ITERATIONS: usize = 100;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Primitive {
    Sha1,
    Llw,
    #[value(name = "ecdsa-sha1")]
    EcdsaSha1,
    #[value(name = "ecdsa-llw")]
    EcdsaLlw,
    Aes10,
    Aes12,
}

impl Primitive {
    pub const ALL: [Primitive; 6] =
        [Primitive::Sha1, Primitive::Llw, Primitive::EcdsaSha1, Primitive::EcdsaLlw, Primitive::Aes10, Primitive::Aes12];

    pub fn name(self) -> &'static str {
        match self {
            Primitive::Sha1 => "sha1",
            Primitive::Llw => "llw",
            Primitive::EcdsaSha1 => "ecdsa-sha1",
            Primitive::EcdsaLlw => "ecdsa-llw",
            Primitive::Aes10 => "aes10",
            Primitive::Aes12 => "aes12",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BenchResult {
    pub primitive: &'static str,
    pub size_bytes: usize,
    pub iterations: usize,
    /// Sum of the timed iterations.
    pub total_ms: f64,
    /// Median of the timed iterations.
    pub ns_per_op: f64,
}

/// Times `iterations` runs of `primitive` over a `size`-byte input after
/// [`WARMUP`] untimed runs.
pub fn measure(primitive: Primitive, size: usize, iterations: usize, seed: u64) -> BenchResult {
    let iterations = iterations.max(MIN_ITERATIONS);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut input = vec![0u8; size];
    rng.fill_bytes(&mut input);
    let mut key = [0u8; 24];
    rng.fill_bytes(&mut key);
    let key = AesKey192::new(key);
    let mut iv = [0u8; 16];
    rng.fill_bytes(&mut iv);
    let curve = CurveParams::p256();
    let mut key_seed = [7u8; 32];
    rng.fill_bytes(&mut key_seed);
    let pair = keygen(&curve, &key_seed).expect("random seed yields a key");

    let mut op: Box<dyn FnMut()> = match primitive {
        Primitive::Sha1 => Box::new(|| {
            black_box(sha1_hash(black_box(&input)));
        }),
        Primitive::Llw => Box::new(|| {
            black_box(llw_hash(black_box(&input)).expect("bench input fits"));
        }),
        Primitive::EcdsaSha1 | Primitive::EcdsaLlw => {
            let alg = if primitive == Primitive::EcdsaSha1 { HashAlg::Sha1 } else { HashAlg::Llw256 };
            Box::new(move || {
                black_box(sign(&curve, &pair.private, black_box(&input), alg).expect("valid key"));
            })
        }
        Primitive::Aes10 | Primitive::Aes12 => {
            let rounds = if primitive == Primitive::Aes10 { RoundConfig::Ten } else { RoundConfig::Twelve };
            Box::new(move || {
                let schedule = expand_key(&key, rounds);
                black_box(apply_keystream(black_box(&input), &schedule, &iv));
            })
        }
    };

    for _ in 0..WARMUP {
        op();
    }
    let mut samples: Vec<u128> = (0..iterations)
        .map(|_| {
            let t = Instant::now();
            op();
            t.elapsed().as_nanos()
        })
        .collect();
    let total: u128 = samples.iter().sum();
    samples.sort_unstable();
    let mid = samples.len() / 2;
    let median = if samples.len() % 2 == 0 { (samples[mid - 1] + samples[mid]) as f64 / 2.0 } else { samples[mid] as f64 };
    BenchResult {
        primitive: primitive.name(),
        size_bytes: size,
        iterations,
        total_ms: total as f64 / 1e6,
        ns_per_op: median,
    }
}

pub fn run(primitives: &[Primitive], sizes: &[usize], iterations: usize, seed: u64) -> Vec<BenchResult> {
    primitives.iter().flat_map(|p| sizes.iter().map(move |s| measure(*p, *s, iterations, seed))).collect()
}

pub fn to_csv(results: &[BenchResult]) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in results {
        w.serialize(r).expect("in-memory csv");
    }
    w.into_inner().expect("in-memory csv")
}
