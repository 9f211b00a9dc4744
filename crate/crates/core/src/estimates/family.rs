//! Random band-limited test families with prescribed spectral envelopes.
//!
//! Coefficients are per-component complex Gaussians drawn from a ChaCha
//! stream seeded per (family seed, trial), scaled by the envelope, and
//! conjugate-symmetrized when a real-valued family is requested.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::dyadic::DyadicDecomposition;
use crate::grid::SpectralCoeffs;

/// Spectral weight profile of the family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SpectralEnvelope {
    /// Unit weight on every lattice coefficient.
    Flat,
    /// `w(k) = Σ_j φ_j(k) 2^{-j·exponent}`: per-block decay matched to the
    /// norm in the denominator of the experiment.
    BlockWeighted { exponent: f64 },
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct FamilySpec {
    pub dim: usize,
    pub envelope: SpectralEnvelope,
    pub real_valued: bool,
    pub seed: u64,
}

impl FamilySpec {
    pub fn flat(dim: usize, seed: u64) -> Self {
        FamilySpec {
            dim,
            envelope: SpectralEnvelope::Flat,
            real_valued: false,
            seed,
        }
    }
}

fn envelope_weight(envelope: &SpectralEnvelope, decomp: &DyadicDecomposition, k: &[i64]) -> f64 {
    match envelope {
        SpectralEnvelope::Flat => 1.0,
        SpectralEnvelope::BlockWeighted { exponent } => (0..=decomp.j_max())
            .map(|j| decomp.phi(j, k) * (-(j as f64) * exponent).exp2())
            .sum(),
    }
}

/// Coefficients of trial `t`, deterministic in (spec.seed, t).
pub fn trial_coeffs(
    spec: &FamilySpec,
    decomp: &DyadicDecomposition,
    trial: usize,
) -> SpectralCoeffs {
    let lattice = decomp.lattice().clone();
    let mut rng = ChaCha8Rng::seed_from_u64(
        spec.seed
            .wrapping_add((trial as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)),
    );
    let d = spec.dim;
    let mut out = SpectralCoeffs::zeros(lattice.clone(), d);
    for flat in 0..lattice.len() {
        let k = lattice.member(flat);
        let w = envelope_weight(&spec.envelope, decomp, &k);
        for comp in 0..d {
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            out.values_mut()[flat * d + comp] = Complex64::new(re * w, im * w);
        }
    }
    if spec.real_valued {
        // f real iff F(-k) = conj(F(k)); mirror the lexicographically
        // positive half onto the negative half and make k = 0 real.
        for flat in 0..lattice.len() {
            let k = lattice.member(flat);
            let neg: Vec<i64> = k.iter().map(|ki| -ki).collect();
            if k > neg {
                let neg_flat = lattice.flat_index(&neg).expect("lattice is symmetric");
                for comp in 0..d {
                    out.values_mut()[neg_flat * d + comp] = out.values()[flat * d + comp].conj();
                }
            } else if k == neg {
                for comp in 0..d {
                    let z = out.values()[flat * d + comp];
                    out.values_mut()[flat * d + comp] = Complex64::new(z.re, 0.0);
                }
            }
        }
    }
    out
}
