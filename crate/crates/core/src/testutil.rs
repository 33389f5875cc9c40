pub use crate::linalg::random::{gaussian_matrix as random_matrix, haar_unitary, random_density};
use crate::C64;
pub use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}
