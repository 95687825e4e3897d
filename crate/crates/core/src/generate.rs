//! Seeded test tensors.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::random_orthonormal_from;
use crate::rng::{self, stream, stream_id};
use crate::solver::FactorSet;
use crate::tensor::{assemble, DenseTensor};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GeneratorKind {
    /// I.i.d. standard normal entries.
    Gaussian,
    /// `Σ_j λ_j u^(1)_j ⊗ ... ⊗ u^(k)_j` with random orthonormal factors.
    OdecoExact,
    /// `odeco_exact + noise·G` with `G` standard normal.
    OdecoNoisy,
    /// `odeco_exact` with only `rank − 1` terms, for runs at rank `rank`.
    DefectiveRank,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorSpec {
    pub kind: GeneratorKind,
    pub dims: Vec<usize>,
    /// Number of terms (odeco kinds); for `defective_rank` the nominal rank,
    /// one more than the true rank.
    #[serde(default = "default_rank")]
    pub rank: usize,
    #[serde(default)]
    pub noise: f64,
    #[serde(default)]
    pub seed: u64,
    /// Fixed weights instead of the default log-uniform draw in `[0.5, 5]`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<Vec<f64>>,
}

fn default_rank() -> usize {
    1
}

pub const LAMBDA_MIN: f64 = 0.5;
pub const LAMBDA_MAX: f64 = 5.0;

/// Generated tensor and, for odeco kinds, the factors and weights it was
/// built from (weights in nonincreasing order).
#[derive(Debug, Clone)]
pub struct Generated {
    pub tensor: DenseTensor,
    pub truth: Option<(FactorSet, Vec<f64>)>,
}

impl GeneratorSpec {
    pub fn new(kind: GeneratorKind, dims: Vec<usize>, rank: usize, seed: u64) -> Self {
        Self {
            kind,
            dims,
            rank,
            noise: 0.0,
            seed,
            lambda: None,
        }
    }

    pub fn with_noise(mut self, noise: f64) -> Self {
        self.noise = noise;
        self
    }

    pub fn with_lambda(mut self, lambda: Vec<f64>) -> Self {
        self.lambda = Some(lambda);
        self
    }

    /// Rank of the generated odeco part.
    pub fn true_rank(&self) -> usize {
        match self.kind {
            GeneratorKind::Gaussian => 0,
            GeneratorKind::DefectiveRank => self.rank.saturating_sub(1),
            _ => self.rank,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.dims.is_empty() || self.dims.contains(&0) {
            return bad(format!("invalid dims {:?}", self.dims));
        }
        if !(self.noise >= 0.0 && self.noise.is_finite()) {
            return bad(format!("noise must be finite and nonnegative, got {}", self.noise));
        }
        if self.kind == GeneratorKind::Gaussian {
            return Ok(());
        }
        let min_dim = *self.dims.iter().min().expect("nonempty");
        if self.rank == 0 || self.rank > min_dim {
            return bad(format!("rank {} outside 1..={min_dim}", self.rank));
        }
        if self.kind == GeneratorKind::DefectiveRank && self.rank < 2 {
            return bad("defective_rank needs rank >= 2".into());
        }
        if let Some(l) = &self.lambda {
            if l.len() != self.true_rank() {
                return bad(format!("{} weights for true rank {}", l.len(), self.true_rank()));
            }
            if l.iter().any(|v| !v.is_finite()) {
                return bad("weights must be finite".into());
            }
        }
        Ok(())
    }
}

/// Deterministic in `(spec, repeat)`; each repeat draws from its own streams.
pub fn generate_tensor(spec: &GeneratorSpec, repeat: u32) -> Result<Generated> {
    spec.validate()?;
    let len: usize = spec.dims.iter().product();
    if spec.kind == GeneratorKind::Gaussian {
        let mut rng = stream(spec.seed, stream_id(repeat, rng::PURPOSE_ENTRIES));
        let tensor = DenseTensor::new(spec.dims.clone(), rng::gaussian_vec(&mut rng, len))?;
        return Ok(Generated { tensor, truth: None });
    }

    let r = spec.true_rank();
    let factors = spec
        .dims
        .iter()
        .enumerate()
        .map(|(i, &n)| {
            let mut rng = stream(spec.seed, stream_id(repeat, rng::PURPOSE_FACTOR + i as u64));
            random_orthonormal_from(&mut rng, n, r)
        })
        .collect::<Result<Vec<_>>>()?;
    let lambda = match &spec.lambda {
        Some(l) => l.clone(),
        None => {
            let mut rng = stream(spec.seed, stream_id(repeat, rng::PURPOSE_WEIGHTS));
            let (lo, hi) = (LAMBDA_MIN.ln(), LAMBDA_MAX.ln());
            let mut l: Vec<f64> = (0..r).map(|_| rng.random_range(lo..hi).exp()).collect();
            l.sort_by(|a, b| b.total_cmp(a));
            l
        }
    };
    let mut tensor = assemble(&factors, &lambda)?;
    if spec.kind == GeneratorKind::OdecoNoisy && spec.noise > 0.0 {
        let mut rng = stream(spec.seed, stream_id(repeat, rng::PURPOSE_NOISE));
        let noise = DenseTensor::new(spec.dims.clone(), rng::gaussian_vec(&mut rng, len))?;
        tensor = tensor.add(&noise.scale(spec.noise))?;
    }
    Ok(Generated {
        tensor,
        truth: Some((FactorSet::new(factors)?, lambda)),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::lambda_of;

    #[test]
    fn fixed_weights_are_picked_out() {
        let spec = GeneratorSpec::new(GeneratorKind::OdecoExact, vec![4, 4, 4], 3, 5).with_lambda(vec![3.0, 2.0, 1.0]);
        let g = generate_tensor(&spec, 0).unwrap();
        let (u, l) = g.truth.unwrap();
        let got = lambda_of(&g.tensor, &u).unwrap();
        for (p, q) in got.iter().zip(&l) {
            assert!((p - q).abs() < 1e-13);
        }
    }

    #[test]
    fn zero_noise_matches_exact() {
        let exact = GeneratorSpec::new(GeneratorKind::OdecoExact, vec![4, 3, 5], 2, 9);
        let noisy = GeneratorSpec {
            kind: GeneratorKind::OdecoNoisy,
            ..exact.clone()
        };
        let a = generate_tensor(&exact, 1).unwrap().tensor;
        let b = generate_tensor(&noisy, 1).unwrap().tensor;
        assert_eq!(a, b);
        let c = generate_tensor(&noisy.with_noise(0.1), 1).unwrap().tensor;
        assert_ne!(a, c);
    }

    #[test]
    fn deterministic_and_repeat_dependent() {
        let spec = GeneratorSpec::new(GeneratorKind::Gaussian, vec![5, 5, 5], 1, 42);
        let a = generate_tensor(&spec, 0).unwrap().tensor;
        assert_eq!(a, generate_tensor(&spec, 0).unwrap().tensor);
        assert_ne!(a, generate_tensor(&spec, 1).unwrap().tensor);
        assert!((a.norm() - generate_tensor(&spec, 0).unwrap().tensor.norm()).abs() <= 1e-12);
    }

    #[test]
    fn weights_in_range_and_sorted() {
        for seed in 0..20 {
            let spec = GeneratorSpec::new(GeneratorKind::OdecoExact, vec![5, 4, 3], 3, seed);
            let (_, l) = generate_tensor(&spec, 0).unwrap().truth.unwrap();
            assert!(l.iter().all(|v| (LAMBDA_MIN..LAMBDA_MAX).contains(v)));
            assert!(l.windows(2).all(|w| w[0] >= w[1]));
        }
    }

    #[test]
    fn defective_rank_has_one_fewer_term() {
        let spec = GeneratorSpec::new(GeneratorKind::DefectiveRank, vec![4, 4, 4], 3, 2);
        let (u, l) = generate_tensor(&spec, 0).unwrap().truth.unwrap();
        assert_eq!((u.rank(), l.len()), (2, 2));
    }

    #[test]
    fn invalid_specs() {
        let ok = GeneratorSpec::new(GeneratorKind::OdecoExact, vec![3, 3, 3], 2, 0);
        assert!(ok.validate().is_ok());
        assert!(GeneratorSpec { rank: 4, ..ok.clone() }.validate().is_err());
        assert!(GeneratorSpec { dims: vec![3, 0, 3], ..ok.clone() }.validate().is_err());
        assert!(ok.clone().with_noise(-1.0).validate().is_err());
        assert!(ok.clone().with_lambda(vec![1.0]).validate().is_err());
        let defective = GeneratorSpec { kind: GeneratorKind::DefectiveRank, rank: 1, ..ok };
        assert!(defective.validate().is_err());
    }

    #[test]
    fn unknown_keys_rejected() {
        let json = r#"{"kind":"gaussian","dims":[3,3,3],"seed":1,"sigma":0.1}"#;
        assert!(serde_json::from_str::<GeneratorSpec>(json).is_err());
        let json = r#"{"kind":"odeco_noisy","dims":[3,3,3],"rank":2,"noise":0.1}"#;
        assert!(serde_json::from_str::<GeneratorSpec>(json).is_ok());
    }
}
