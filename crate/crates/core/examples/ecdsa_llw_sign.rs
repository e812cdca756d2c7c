//! Sign with P-256 over a Lesamnta-LW digest, then verify and tamper.

use medsentry::hash::HashAlg;
use medsentry::sign::{keygen, sign, verify, CurveParams};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let curve = CurveParams::p256();
    let pair = keygen(&curve, &[0x5a; 32])?;
    let msg = b"store heart_rate=72";

    for alg in [HashAlg::Llw256, HashAlg::Sha1] {
        let sig = sign(&curve, &pair.private, msg, alg)?;
        println!("{alg:?}");
        println!("  r = {:064x}", sig.r);
        println!("  s = {:064x}", sig.s);
        println!("  valid:           {}", verify(&curve, &pair.public, msg, &sig, alg)?);
        println!("  altered message: {}", verify(&curve, &pair.public, b"store heart_rate=73", &sig, alg)?);
        // nonces are derived from key and digest, so signing again is stable
        println!("  deterministic:   {}", sign(&curve, &pair.private, msg, alg)? == sig);
    }
    Ok(())
}
