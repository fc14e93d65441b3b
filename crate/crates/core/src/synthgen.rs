//! Seeded generators for datasets with known (or known-absent) paradoxes.
//!
//! All generators draw from ChaCha8 seeded with `seed_from_u64`, so a parameter
//! record including its seed fully determines the output. The algorithm name
//! is recorded in the dataset metadata under `rng`.

use alloc::format;
use alloc::string::ToString;
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::dataset::{Dataset, VariableKind, VariableSpec};
use crate::error::{Error, Result};
use crate::math::{logistic, logit};

pub const RNG_ALGORITHM: &str = "ChaCha8";

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn invalid(msg: impl Into<alloc::string::String>) -> Error {
    Error::InvalidParameter(msg.into())
}

fn in_open_unit(p: f64) -> bool {
    p > 0.0 && p < 1.0
}

fn finish(schema: &[VariableSpec], columns: Vec<Vec<f64>>, generator: &str, seed: u64) -> Result<Dataset> {
    Ok(Dataset::from_columns(schema, columns)?
        .dataset
        .with_metadata("generator", generator)
        .with_metadata("rng", RNG_ALGORITHM)
        .with_metadata("seed", seed.to_string()))
}

/// Activity sessions with survivor bias.
///
/// Session lengths follow a geometric law truncated at `max_len`: a session
/// grows by one answer with probability `p_continue`. A session of length `L`
/// emits one row per position `k = 1..=L`, accepted with log-odds
/// `logit(base_accept) + within_slope (k - 1) + between_offset (L - 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SessionGenParams {
    pub n_sessions: usize,
    pub p_continue: f64,
    pub max_len: usize,
    pub base_accept: f64,
    pub within_slope: f64,
    pub between_offset: f64,
    pub seed: u64,
}

impl Default for SessionGenParams {
    fn default() -> Self {
        Self {
            n_sessions: 100_000,
            p_continue: 0.5,
            max_len: 8,
            base_accept: 0.2,
            within_slope: -0.3,
            between_offset: 0.5,
            seed: 0,
        }
    }
}

impl SessionGenParams {
    /// Acceptance probability of position `k` in a session of length `len`.
    pub fn cell_probability(&self, k: usize, len: usize) -> f64 {
        logistic(
            logit(self.base_accept)
                + self.within_slope * (k as f64 - 1.0)
                + self.between_offset * (len as f64 - 1.0),
        )
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_sessions == 0 {
            return Err(invalid("n_sessions must be positive"));
        }
        if !in_open_unit(self.p_continue) {
            return Err(invalid(format!("p_continue must lie in (0, 1), got {}", self.p_continue)));
        }
        if self.max_len == 0 {
            return Err(invalid("max_len must be positive"));
        }
        if !in_open_unit(self.base_accept) {
            return Err(invalid(format!("base_accept must lie in (0, 1), got {}", self.base_accept)));
        }
        if !(self.within_slope < 0.0 && self.within_slope.is_finite()) {
            return Err(invalid(format!("within_slope must be negative, got {}", self.within_slope)));
        }
        if !(self.between_offset > 0.0 && self.between_offset.is_finite()) {
            return Err(invalid(format!(
                "between_offset must be positive, got {}",
                self.between_offset
            )));
        }
        for len in 1..=self.max_len {
            for k in 1..=len {
                if !in_open_unit(self.cell_probability(k, len)) {
                    return Err(invalid(format!(
                        "acceptance probability at position {k}, length {len} leaves (0, 1)"
                    )));
                }
            }
        }
        Ok(())
    }
}

pub fn gen_sessions(p: &SessionGenParams) -> Result<Dataset> {
    p.validate()?;
    let mut rng = rng(p.seed);
    let mut position = Vec::new();
    let mut length = Vec::new();
    let mut accepted = Vec::new();
    for _ in 0..p.n_sessions {
        let mut len = 1;
        while len < p.max_len && rng.random_bool(p.p_continue) {
            len += 1;
        }
        for k in 1..=len {
            position.push(k as f64);
            length.push(len as f64);
            accepted.push(f64::from(u8::from(rng.random_bool(p.cell_probability(k, len)))));
        }
    }
    finish(
        &[
            VariableSpec::new("position", VariableKind::Integer),
            VariableSpec::new("session_length", VariableKind::Integer),
            VariableSpec::new("accepted", VariableKind::BinaryOutcome),
        ],
        vec![position, length, accepted],
        "sessions",
        p.seed,
    )
}

/// Groups with shifted predictor means and outcome offsets sharing one slope.
#[derive(Debug, Clone, PartialEq)]
pub struct ReversalGenParams {
    pub n_per_group: usize,
    /// Mean of `x_p` in each group (unit variance).
    pub group_centers: Vec<f64>,
    /// Outcome log-odds offset of each group.
    pub group_offsets: Vec<f64>,
    pub within_slope: f64,
    pub seed: u64,
}

impl Default for ReversalGenParams {
    fn default() -> Self {
        Self {
            n_per_group: 5_000,
            group_centers: vec![0.0, 3.0],
            group_offsets: vec![2.0, -2.0],
            within_slope: 0.5,
            seed: 0,
        }
    }
}

impl ReversalGenParams {
    pub fn validate(&self) -> Result<()> {
        if self.n_per_group == 0 {
            return Err(invalid("n_per_group must be positive"));
        }
        if self.group_centers.is_empty() || self.group_centers.len() != self.group_offsets.len() {
            return Err(invalid(format!(
                "{} group centers but {} offsets",
                self.group_centers.len(),
                self.group_offsets.len()
            )));
        }
        let all_finite = self
            .group_centers
            .iter()
            .chain(&self.group_offsets)
            .chain(core::iter::once(&self.within_slope))
            .all(|v| v.is_finite());
        if !all_finite {
            return Err(invalid("reversal parameters must be finite"));
        }
        Ok(())
    }
}

/// Columns `x_p`, `group` (0-based integer) and binary `outcome`.
pub fn gen_reversal(p: &ReversalGenParams) -> Result<Dataset> {
    p.validate()?;
    let mut rng = rng(p.seed);
    let total = p.n_per_group * p.group_centers.len();
    let mut xp = Vec::with_capacity(total);
    let mut group = Vec::with_capacity(total);
    let mut outcome = Vec::with_capacity(total);
    for (g, (&center, &offset)) in p.group_centers.iter().zip(&p.group_offsets).enumerate() {
        let normal = Normal::new(center, 1.0).map_err(|e| invalid(e.to_string()))?;
        for _ in 0..p.n_per_group {
            let x = normal.sample(&mut rng);
            xp.push(x);
            group.push(g as f64);
            outcome.push(f64::from(u8::from(
                rng.random_bool(logistic(offset + p.within_slope * x)),
            )));
        }
    }
    finish(
        &[
            VariableSpec::new("x_p", VariableKind::Continuous),
            VariableSpec::new("group", VariableKind::Categorical),
            VariableSpec::new("outcome", VariableKind::BinaryOutcome),
        ],
        vec![xp, group, outcome],
        "reversal",
        p.seed,
    )
}

/// `m_vars` independent uniform columns `x1..xm` and an independent fair
/// binary `outcome`.
pub fn gen_null(n: usize, m_vars: usize, seed: u64) -> Result<Dataset> {
    if n == 0 {
        return Err(invalid("n must be positive"));
    }
    if m_vars < 2 {
        return Err(invalid(format!("need at least 2 variables, got {m_vars}")));
    }
    let mut rng = rng(seed);
    let mut columns: Vec<Vec<f64>> = (0..=m_vars).map(|_| Vec::with_capacity(n)).collect();
    for _ in 0..n {
        for col in columns.iter_mut().take(m_vars) {
            col.push(rng.random::<f64>());
        }
        columns[m_vars].push(f64::from(u8::from(rng.random_bool(0.5))));
    }
    let mut schema: Vec<VariableSpec> = (1..=m_vars)
        .map(|i| VariableSpec::new(format!("x{i}"), VariableKind::Continuous))
        .collect();
    schema.push(VariableSpec::new("outcome", VariableKind::BinaryOutcome));
    finish(&schema, columns, "null", seed)
}

/// A majority subgroup whose trend opposes that of the other subgroups.
///
/// `x_c` takes the values 1, 2, 3 with `P(x_c = 1) = majority_share`; the
/// remaining mass is split evenly. `x_p` is uniform on `x_range` in every
/// group. Within `x_c = 1` the outcome log-odds move with `majority_slope`,
/// elsewhere with `minority_slope`, plus the per-group `offsets`.
#[derive(Debug, Clone, PartialEq)]
pub struct MajorityMaskParams {
    pub n: usize,
    pub majority_share: f64,
    pub majority_slope: f64,
    pub minority_slope: f64,
    pub offsets: [f64; 3],
    pub x_range: (f64, f64),
    pub seed: u64,
}

impl Default for MajorityMaskParams {
    fn default() -> Self {
        Self {
            n: 100_000,
            majority_share: 0.65,
            majority_slope: -0.6,
            minority_slope: 0.6,
            // With x in [-2, 2] every cell probability stays within [0.23, 0.86].
            offsets: [0.0, 0.3, 0.6],
            x_range: (-2.0, 2.0),
            seed: 0,
        }
    }
}

impl MajorityMaskParams {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(invalid("n must be positive"));
        }
        if !in_open_unit(self.majority_share) {
            return Err(invalid("majority_share must lie in (0, 1)"));
        }
        let (lo, hi) = self.x_range;
        if !(lo < hi && lo.is_finite() && hi.is_finite()) {
            return Err(invalid("x_range must be a finite, non-empty interval"));
        }
        if !(self.majority_slope.is_finite()
            && self.minority_slope.is_finite()
            && self.offsets.iter().all(|v| v.is_finite()))
        {
            return Err(invalid("slopes and offsets must be finite"));
        }
        Ok(())
    }
}

pub fn gen_majority_mask(seed: u64) -> Result<Dataset> {
    gen_majority_mask_with(&MajorityMaskParams {
        seed,
        ..MajorityMaskParams::default()
    })
}

/// Columns `x_p`, `x_c` (1, 2 or 3) and binary `outcome`.
pub fn gen_majority_mask_with(p: &MajorityMaskParams) -> Result<Dataset> {
    p.validate()?;
    let mut rng = rng(p.seed);
    let (lo, hi) = p.x_range;
    let mut xp = Vec::with_capacity(p.n);
    let mut xc = Vec::with_capacity(p.n);
    let mut outcome = Vec::with_capacity(p.n);
    for _ in 0..p.n {
        let u: f64 = rng.random();
        let group = if u < p.majority_share {
            0
        } else if u < p.majority_share + (1.0 - p.majority_share) / 2.0 {
            1
        } else {
            2
        };
        let x = lo + (hi - lo) * rng.random::<f64>();
        let slope = if group == 0 { p.majority_slope } else { p.minority_slope };
        xp.push(x);
        xc.push((group + 1) as f64);
        outcome.push(f64::from(u8::from(
            rng.random_bool(logistic(p.offsets[group] + slope * x)),
        )));
    }
    finish(
        &[
            VariableSpec::new("x_p", VariableKind::Continuous),
            VariableSpec::new("x_c", VariableKind::Categorical),
            VariableSpec::new("outcome", VariableKind::BinaryOutcome),
        ],
        vec![xp, xc, outcome],
        "majority_mask",
        p.seed,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn session_param_validation() {
        let bad = SessionGenParams {
            p_continue: 1.5,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let bad = SessionGenParams {
            within_slope: 0.1,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let saturated = SessionGenParams {
            between_offset: 200.0,
            max_len: 8,
            ..Default::default()
        };
        assert!(saturated.validate().is_err());
        assert!(SessionGenParams::default().validate().is_ok());
    }

    #[test]
    fn sessions_emit_every_position() {
        let d = gen_sessions(&SessionGenParams {
            n_sessions: 500,
            seed: 3,
            ..Default::default()
        })
        .unwrap();
        let pos = d.column("position").unwrap();
        let len = d.column("session_length").unwrap();
        // Rows come in runs 1..=L for each session.
        let mut i = 0;
        let mut sessions = 0;
        while i < pos.len() {
            let l = len[i] as usize;
            for k in 1..=l {
                assert_eq!(pos[i + k - 1], k as f64);
                assert_eq!(len[i + k - 1], l as f64);
            }
            i += l;
            sessions += 1;
        }
        assert_eq!(sessions, 500);
        assert_eq!(
            d.metadata().iter().find(|(k, _)| k == "rng").map(|(_, v)| v.as_str()),
            Some(RNG_ALGORITHM)
        );
    }

    #[test]
    fn generators_are_deterministic() {
        let p = SessionGenParams {
            n_sessions: 1000,
            seed: 7,
            ..Default::default()
        };
        assert_eq!(gen_sessions(&p).unwrap(), gen_sessions(&p).unwrap());
        assert_eq!(gen_null(100, 3, 9).unwrap(), gen_null(100, 3, 9).unwrap());
        assert_ne!(gen_null(100, 3, 9).unwrap(), gen_null(100, 3, 10).unwrap());
        let r = ReversalGenParams {
            n_per_group: 50,
            ..Default::default()
        };
        assert_eq!(gen_reversal(&r).unwrap(), gen_reversal(&r).unwrap());
        let m = MajorityMaskParams {
            n: 200,
            ..Default::default()
        };
        assert_eq!(gen_majority_mask_with(&m).unwrap(), gen_majority_mask_with(&m).unwrap());
    }

    #[test]
    fn null_rejects_bad_sizes() {
        assert!(gen_null(0, 3, 1).is_err());
        assert!(gen_null(10, 1, 1).is_err());
        let d = gen_null(10, 3, 1).unwrap();
        assert_eq!(d.variables(), ["x1", "x2", "x3"]);
    }

    #[test]
    fn reversal_rejects_mismatched_groups() {
        let p = ReversalGenParams {
            group_offsets: vec![1.0],
            ..Default::default()
        };
        assert!(gen_reversal(&p).is_err());
    }

    #[test]
    fn majority_mask_share() {
        let d = gen_majority_mask(1).unwrap();
        let xc = d.column("x_c").unwrap();
        let share = xc.iter().filter(|&&c| c == 1.0).count() as f64 / xc.len() as f64;
        assert!((share - 0.65).abs() < 0.01);
    }
}
