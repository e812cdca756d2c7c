//! AES-192 with the standard 12 rounds and the reduced 10-round variant.

use std::time::Instant;

use medsentry::cipher::{decrypt_payload, encrypt_block, encrypt_payload, expand_key, AesKey192, RoundConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let key = AesKey192::from_slice(&hex::decode("000102030405060708090a0b0c0d0e0f1011121314151617")?)?;
    let block: [u8; 16] = hex::decode("00112233445566778899aabbccddeeff")?.try_into().unwrap();
    let iv = [0x24; 16];
    let payload = vec![0xa5u8; 4096];

    for rounds in [RoundConfig::Twelve, RoundConfig::Ten] {
        let schedule = expand_key(&key, rounds);
        let ct = encrypt_payload(&payload, &key, rounds, &iv);
        assert_eq!(decrypt_payload(&ct, &key, rounds, &iv), payload);

        let start = Instant::now();
        for _ in 0..200 {
            std::hint::black_box(encrypt_payload(&payload, &key, rounds, &iv));
        }
        println!(
            "{:>2} rounds  block {}  4 KiB CTR {:?}/op",
            rounds.rounds(),
            hex::encode(encrypt_block(&block, &schedule)),
            start.elapsed() / 200
        );
    }
    Ok(())
}
