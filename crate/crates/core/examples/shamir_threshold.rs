//! Split a 256-bit master secret 3-of-5 and recover it from any three shares.

use medsentry::sharing::{reconstruct, split, MasterSecret, PrimeField};
use num_bigint::BigUint;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let field = PrimeField::production();
    let secret = MasterSecret(field.element(BigUint::from_bytes_be(&[0x3c; 31]))?);
    let shares = split(&field, &secret, 5, 3, 7)?;
    for s in &shares {
        println!("share x={} y={:x}", s.x.value(), s.y.value());
    }

    for pick in [[0, 1, 2], [0, 2, 4], [1, 3, 4]] {
        let subset: Vec<_> = pick.iter().map(|i| shares[*i].clone()).collect();
        let got = reconstruct(&field, &subset, 3)?;
        println!("{pick:?} -> {}", if got == secret { "recovered" } else { "mismatch" });
    }
    if let Err(e) = reconstruct(&field, &shares[..2], 3) {
        println!("two shares: {e}");
    }
    Ok(())
}
