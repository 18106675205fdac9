use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Independent random streams per simulation purpose.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Purpose {
    Rates = 1,
    CounterpartyDefault = 2,
    FirmDefault = 3,
    Funding = 4,
    Subsample = 5,
}

/// Counter-based stream for `(seed, purpose, path)`; results do not depend on
/// how paths are scheduled across threads.
pub fn path_rng(seed: u64, purpose: Purpose, path: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&(purpose as u64).to_le_bytes());
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(path);
    rng
}
