//! Hash a few inputs with Lesamnta-LW-256 and SHA-1, one-shot and streaming.

use medsentry::hash::{llw_hash, llw_pad, sha1_hash, LlwState};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let inputs: [&[u8]; 3] = [b"", b"abc", b"heart_rate=72;spo2=98;temp=36.8"];
    for input in inputs {
        println!("{:?}", String::from_utf8_lossy(input));
        println!("  blocks {}", llw_pad(input)?.len());
        println!("  llw    {}", hex::encode(llw_hash(input)?.0));
        println!("  sha1   {}", hex::encode(sha1_hash(input).0));
    }

    let mut state = LlwState::new();
    for chunk in b"heart_rate=72;spo2=98;temp=36.8".chunks(7) {
        state.update(chunk);
    }
    println!("streamed {}", hex::encode(state.finalize()?.0));
    Ok(())
}
