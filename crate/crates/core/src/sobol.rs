//! Scrambled Sobol points on `[-1, 1]^D`.
//!
//! Direction numbers come from the Joe-Kuo D6 tables of the `sobol` crate.
//! Scrambling is a random digital shift: every coordinate's 32-bit integer
//! representation is XORed with a per-dimension random word. The all-zero
//! first point of the raw sequence is skipped, so the first unscrambled point
//! is the box center.

use nalgebra::DVector;
use rand::Rng;
use sobol::params::JoeKuoD6;
use sobol::Sobol;

use crate::error::{Error, Result};
use crate::linalg::rng_from_seed;

const SCALE: f64 = 4_294_967_296.0; // 2^32

pub struct SobolSampler {
    inner: Sobol<u32>,
    shift: Vec<u32>,
}

impl SobolSampler {
    pub fn new(dims: usize, scramble_seed: Option<u64>) -> Result<Self> {
        let params = if dims <= 1000 {
            JoeKuoD6::standard()
        } else {
            JoeKuoD6::extended()
        };
        if dims == 0 || dims > 21_201 {
            return Err(Error::Dimension(format!(
                "Sobol sequences support 1..=21201 dimensions, got {dims}"
            )));
        }
        let mut inner = Sobol::<u32>::new(dims, &params);
        inner.next(); // drop the origin
        let shift = match scramble_seed {
            Some(seed) => {
                let mut rng = rng_from_seed(seed);
                (0..dims).map(|_| rng.random::<u32>()).collect()
            }
            None => vec![0; dims],
        };
        Ok(SobolSampler { inner, shift })
    }

    /// Next point in `[0, 1)^D`.
    pub fn next_unit(&mut self) -> Vec<f64> {
        let raw = self.inner.next().expect("Sobol sequence exhausted");
        raw.iter()
            .zip(&self.shift)
            .map(|(v, s)| (*v ^ *s) as f64 / SCALE)
            .collect()
    }

    /// Next point in `[-1, 1]^D`.
    pub fn next_box(&mut self) -> DVector<f64> {
        DVector::from_iterator(self.shift.len(), self.next_unit().into_iter().map(|u| 2.0 * u - 1.0))
    }

    pub fn take_box(&mut self, n: usize) -> Vec<DVector<f64>> {
        (0..n).map(|_| self.next_box()).collect()
    }
}
