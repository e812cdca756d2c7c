//! Frozen vectors from the independent oracles in tests/fixtures.

use medsentry::cipher::{decrypt_block, encrypt_block, expand_key, AesKey192, RoundConfig};
use medsentry::hash::{llw_compress, llw_hash, llw_pad, sha1_hash};
use medsentry::sign::{verify, CurveParams, KeyPair, Point, SignatureRS};
use medsentry::hash::HashAlg;
use num_bigint::BigUint;

fn rows(text: &str) -> impl Iterator<Item = Vec<&str>> {
    text.lines().filter(|l| !l.starts_with('#') && !l.trim().is_empty()).map(|l| l.split('\t').collect())
}

#[test]
fn lesamnta_lw_digests_match_reference() {
    let mut n = 0;
    for row in rows(include_str!("fixtures/llw256_vectors.txt")) {
        let input = hex::decode(row[0]).unwrap();
        assert_eq!(hex::encode(llw_hash(&input).unwrap().0), row[1], "input {}", row[0]);
        n += 1;
    }
    assert!(n >= 80);
}

#[test]
fn lesamnta_lw_compression_matches_reference() {
    for row in rows(include_str!("fixtures/llw256_compress.txt")) {
        let chain: [u8; 32] = hex::decode(row[0]).unwrap().try_into().unwrap();
        let block: [u8; 16] = hex::decode(row[1]).unwrap().try_into().unwrap();
        assert_eq!(hex::encode(llw_compress(&chain, &block)), row[2]);
    }
}

#[test]
fn lesamnta_lw_padding_matches_reference() {
    for row in rows(include_str!("fixtures/llw256_padding.txt")) {
        let input = hex::decode(row[0]).unwrap();
        let blocks: Vec<u8> = llw_pad(&input).unwrap().concat();
        assert_eq!(hex::encode(blocks), row[1]);
    }
}

#[test]
fn sha1_matches_hashlib() {
    for row in rows(include_str!("fixtures/sha1_vectors.txt")) {
        let input = hex::decode(row[0]).unwrap();
        assert_eq!(hex::encode(sha1_hash(&input).0), row[1]);
    }
}

#[test]
fn aes192_twelve_rounds_matches_standard_vectors() {
    let mut n = 0;
    for row in rows(include_str!("fixtures/aes192_vectors.txt")) {
        let key = AesKey192::from_slice(&hex::decode(row[0]).unwrap()).unwrap();
        let pt: [u8; 16] = hex::decode(row[1]).unwrap().try_into().unwrap();
        let schedule = expand_key(&key, RoundConfig::Twelve);
        let ct = encrypt_block(&pt, &schedule);
        assert_eq!(hex::encode(ct), row[2]);
        assert_eq!(decrypt_block(&ct, &schedule), pt);
        n += 1;
    }
    assert_eq!(n, 5 + 128 + 192 + 64);
}

#[test]
fn openssl_signatures_verify() {
    let curve = CurveParams::p256();
    for row in rows(include_str!("fixtures/ecdsa_p256_vectors.txt")) {
        let alg = if row[0] == "sha1" { HashAlg::Sha1 } else { HashAlg::Llw256 };
        let d = BigUint::parse_bytes(row[1].as_bytes(), 16).unwrap();
        let public = Point::from_uncompressed(&hex::decode(row[2]).unwrap()).unwrap();
        let kp = KeyPair::from_private(&curve, d).unwrap();
        assert_eq!(kp.public, public, "scalar multiplication disagrees with OpenSSL");
        let msg = hex::decode(row[3]).unwrap();
        let sig = SignatureRS {
            r: BigUint::parse_bytes(row[4].as_bytes(), 16).unwrap(),
            s: BigUint::parse_bytes(row[5].as_bytes(), 16).unwrap(),
        };
        assert!(verify(&curve, &public, &msg, &sig, alg).unwrap());
        let other = if alg == HashAlg::Sha1 { HashAlg::Llw256 } else { HashAlg::Sha1 };
        assert!(!verify(&curve, &public, &msg, &sig, other).unwrap());
    }
}
