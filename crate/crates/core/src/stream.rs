//! Seeded random streams.
//!
//! All randomness flows through [`Stream`], a ChaCha20 generator
//! (`rand_chacha::ChaCha20Rng`). A stream is identified by a 64-bit seed
//! and a 64-bit stream index; distinct indices under the same seed yield
//! independent sequences, so batch jobs can hand one stream to each
//! scenario and stay independent of scheduling.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

pub type Stream = ChaCha20Rng;

/// Stream `index` of the family keyed by `seed`.
pub fn stream(seed: u64, index: u64) -> Stream {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// `n` independent Wiener increments with standard deviation `√dt`.
pub fn wiener_increments<R: Rng + ?Sized>(rng: &mut R, n: usize, dt: f64) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(Error::contract("need at least one increment"));
    }
    let mut out = vec![0.0; n];
    fill_wiener(rng, &mut out, dt)?;
    Ok(out)
}

pub fn fill_wiener<R: Rng + ?Sized>(rng: &mut R, out: &mut [f64], dt: f64) -> Result<()> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::contract(format!("dt must be > 0, got {dt}")));
    }
    let sd = dt.sqrt();
    for v in out.iter_mut() {
        let z: f64 = rng.sample(StandardNormal);
        *v = sd * z;
    }
    Ok(())
}
