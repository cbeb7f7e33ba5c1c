//! Pose and sequence evaluation metrics.

use alloc::string::String;
use alloc::vec::Vec;

use crate::geom::{dist2, Vec3};
use crate::mol::{ResidueType, NUM_RESIDUE_TYPES};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MetricsError {
    #[error("coordinate sets differ in length: {0} vs {1}")]
    Length(usize, usize),
    #[error("no atoms to compare")]
    Empty,
    #[error("contact mask selects no residues")]
    EmptyMask,
    #[error("mask mismatch: {what} has {got} entries, mask has {mask}")]
    Mask {
        what: &'static str,
        got: usize,
        mask: usize,
    },
}

/// Root-mean-square deviation without superposition.
pub fn rmsd(pred: &[Vec3], truth: &[Vec3]) -> Result<f64, MetricsError> {
    if pred.len() != truth.len() {
        return Err(MetricsError::Length(pred.len(), truth.len()));
    }
    if pred.is_empty() {
        return Err(MetricsError::Empty);
    }
    let s: f64 = pred.iter().zip(truth).map(|(&a, &b)| dist2(a, b)).sum();
    Ok(libm::sqrt(s / pred.len() as f64))
}

/// Median with the midpoint convention for even counts. NaN for no values.
pub fn median(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

/// Evaluation of the samples generated for one complex.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalRecord {
    pub id: String,
    pub rmsds: Vec<f64>,
    pub recovery: Option<f64>,
    pub blosum: Option<f64>,
}

impl EvalRecord {
    pub fn samples(&self) -> usize {
        self.rmsds.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RmsdStats {
    /// Percentage of samples below 2 Å.
    pub below_2: f64,
    /// Percentage of samples below 5 Å.
    pub below_5: f64,
    pub median: f64,
    pub count: usize,
}

fn stats_of(values: &[f64]) -> RmsdStats {
    let n = values.len();
    let pct = |cut: f64| {
        if n == 0 {
            f64::NAN
        } else {
            100.0 * values.iter().filter(|&&r| r < cut).count() as f64 / n as f64
        }
    };
    RmsdStats {
        below_2: pct(2.0),
        below_5: pct(5.0),
        median: median(values),
        count: n,
    }
}

/// Statistics over every sample of every record.
pub fn rmsd_stats(records: &[EvalRecord]) -> RmsdStats {
    let all: Vec<f64> = records.iter().flat_map(|r| r.rmsds.iter().copied()).collect();
    stats_of(&all)
}

/// Per-complex minimum over the first `k` samples.
pub fn best_of_k(records: &[EvalRecord], k: usize) -> Vec<f64> {
    records
        .iter()
        .filter(|r| !r.rmsds.is_empty() && k > 0)
        .map(|r| r.rmsds.iter().take(k).copied().fold(f64::INFINITY, f64::min))
        .collect()
}

/// Statistics over the best-of-`k` values, one per complex.
pub fn best_of_k_stats(records: &[EvalRecord], k: usize) -> RmsdStats {
    stats_of(&best_of_k(records, k))
}

fn check_mask(what: &'static str, len: usize, mask: &[bool]) -> Result<(), MetricsError> {
    if len != mask.len() {
        return Err(MetricsError::Mask {
            what,
            got: len,
            mask: mask.len(),
        });
    }
    if !mask.iter().any(|&m| m) {
        return Err(MetricsError::EmptyMask);
    }
    Ok(())
}

/// Fraction of masked residues whose predicted type equals the true type.
pub fn sequence_recovery(
    pred: &[ResidueType],
    truth: &[ResidueType],
    mask: &[bool],
) -> Result<f64, MetricsError> {
    check_mask("predicted types", pred.len(), mask)?;
    check_mask("true types", truth.len(), mask)?;
    let (mut hit, mut total) = (0usize, 0usize);
    for ((p, t), &m) in pred.iter().zip(truth).zip(mask) {
        if m {
            total += 1;
            hit += (p == t) as usize;
        }
    }
    Ok(hit as f64 / total as f64)
}

/// BLOSUM62 in the residue-type order `ARNDCQEGHILKMFPSTWYV`.
#[rustfmt::skip]
pub const BLOSUM62: [[i8; NUM_RESIDUE_TYPES]; NUM_RESIDUE_TYPES] = [
    [ 4, -1, -2, -2,  0, -1, -1,  0, -2, -1, -1, -1, -1, -2, -1,  1,  0, -3, -2,  0],
    [-1,  5,  0, -2, -3,  1,  0, -2,  0, -3, -2,  2, -1, -3, -2, -1, -1, -3, -2, -3],
    [-2,  0,  6,  1, -3,  0,  0,  0,  1, -3, -3,  0, -2, -3, -2,  1,  0, -4, -2, -3],
    [-2, -2,  1,  6, -3,  0,  2, -1, -1, -3, -4, -1, -3, -3, -1,  0, -1, -4, -3, -3],
    [ 0, -3, -3, -3,  9, -3, -4, -3, -3, -1, -1, -3, -1, -2, -3, -1, -1, -2, -2, -1],
    [-1,  1,  0,  0, -3,  5,  2, -2,  0, -3, -2,  1,  0, -3, -1,  0, -1, -2, -1, -2],
    [-1,  0,  0,  2, -4,  2,  5, -2,  0, -3, -3,  1, -2, -3, -1,  0, -1, -3, -2, -2],
    [ 0, -2,  0, -1, -3, -2, -2,  6, -2, -4, -4, -2, -3, -3, -2,  0, -2, -2, -3, -3],
    [-2,  0,  1, -1, -3,  0,  0, -2,  8, -3, -3, -1, -2, -1, -2, -1, -2, -2,  2, -3],
    [-1, -3, -3, -3, -1, -3, -3, -4, -3,  4,  2, -3,  1,  0, -3, -2, -1, -3, -1,  3],
    [-1, -2, -3, -4, -1, -2, -3, -4, -3,  2,  4, -2,  2,  0, -3, -2, -1, -2, -1,  1],
    [-1,  2,  0, -1, -3,  1,  1, -2, -1, -3, -2,  5, -1, -3, -1,  0, -1, -3, -2, -2],
    [-1, -1, -2, -3, -1,  0, -2, -3, -2,  1,  2, -1,  5,  0, -2, -1, -1, -1, -1,  1],
    [-2, -3, -3, -3, -2, -3, -3, -3, -1,  0,  0, -3,  0,  6, -4, -2, -2,  1,  3, -1],
    [-1, -2, -2, -1, -3, -1, -1, -2, -2, -3, -3, -1, -2, -4,  7, -1, -1, -4, -3, -2],
    [ 1, -1,  1,  0, -1,  0,  0,  0, -1, -2, -2,  0, -1, -2, -1,  4,  1, -3, -2, -2],
    [ 0, -1,  0, -1, -1, -1, -1, -2, -2, -1, -1, -1, -1, -2, -1,  1,  5, -2, -2,  0],
    [-3, -3, -4, -4, -2, -2, -3, -2, -2, -3, -2, -3, -1,  1, -4, -3, -2, 11,  2, -3],
    [-2, -2, -2, -3, -2, -1, -2, -3,  2, -1, -1, -2, -1,  3, -3, -2, -2,  2,  7, -1],
    [ 0, -3, -3, -3, -1, -2, -2, -3, -3,  3,  1, -2,  1, -1, -2, -2,  0, -3, -1,  4],
];

/// Substitution-weighted recovery normalized so a perfect design scores 1.
/// Masked-token predictions score 0.
pub fn blosum_score(
    truth: &[ResidueType],
    pred: &[ResidueType],
    mask: &[bool],
) -> Result<f64, MetricsError> {
    check_mask("true types", truth.len(), mask)?;
    check_mask("predicted types", pred.len(), mask)?;
    let (mut num, mut den) = (0i64, 0i64);
    for ((t, p), &m) in truth.iter().zip(pred).zip(mask) {
        if !m || t.is_mask() {
            continue;
        }
        let row = &BLOSUM62[t.index()];
        den += row[t.index()] as i64;
        if !p.is_mask() {
            num += row[p.index()] as i64;
        }
    }
    if den == 0 {
        return Err(MetricsError::EmptyMask);
    }
    Ok(num as f64 / den as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use ResidueType::*;

    #[test]
    fn rmsd_examples() {
        let a = [[0.0; 3], [1.0, 2.0, 3.0]];
        assert_eq!(rmsd(&a, &a).unwrap(), 0.0);
        let b = [[3.0, 4.0, 0.0], [4.0, 6.0, 3.0]];
        assert!((rmsd(&a, &b).unwrap() - 5.0).abs() < 1e-12);
        let c = [[1.0, 0.0, 0.0], [0.0; 3]];
        assert!((rmsd(&[[0.0; 3]; 2], &c).unwrap() - 0.5f64.sqrt()).abs() < 1e-15);
        assert_eq!(rmsd(&a, &c[..1]), Err(MetricsError::Length(2, 1)));
    }

    fn rec(r: &[f64]) -> EvalRecord {
        EvalRecord { id: "x".into(), rmsds: r.to_vec(), recovery: None, blosum: None }
    }

    #[test]
    fn stats_examples() {
        let s = rmsd_stats(&[rec(&[1.0, 1.0])]);
        assert_eq!((s.below_2, s.median), (100.0, 1.0));
        let s = rmsd_stats(&[rec(&[1.0, 3.0])]);
        assert_eq!((s.below_2, s.median), (50.0, 2.0));
        let s = best_of_k_stats(&[rec(&[3.0, 1.5])], 2);
        assert_eq!(s.below_2, 100.0);
    }

    #[test]
    fn recovery_examples() {
        let m = [true; 4];
        assert_eq!(sequence_recovery(&[Ala; 4], &[Ala; 4], &m).unwrap(), 1.0);
        assert_eq!(sequence_recovery(&[Arg; 4], &[Ala; 4], &m).unwrap(), 0.0);
        assert_eq!(
            sequence_recovery(&[Ala, Ala, Arg, Arg], &[Ala; 4], &m).unwrap(),
            0.5
        );
        assert_eq!(
            sequence_recovery(&[Ala], &[Ala], &[false]),
            Err(MetricsError::EmptyMask)
        );
    }

    #[test]
    fn blosum_examples() {
        assert_eq!(blosum_score(&[Ala], &[Arg], &[true]).unwrap(), -0.25);
        assert_eq!(blosum_score(&[Ala, Ala], &[Ala, Arg], &[true, true]).unwrap(), 0.375);
        let all: Vec<_> = ResidueType::ALL.to_vec();
        assert_eq!(blosum_score(&all, &all, &vec![true; 20]).unwrap(), 1.0);
    }

    #[test]
    fn blosum_table_is_symmetric_with_positive_diagonal() {
        for i in 0..20 {
            assert!(BLOSUM62[i][i] > 0);
            for j in 0..20 {
                assert_eq!(BLOSUM62[i][j], BLOSUM62[j][i]);
            }
        }
        assert_eq!(BLOSUM62[Trp.index()][Trp.index()], 11);
        assert_eq!(BLOSUM62[Cys.index()][Cys.index()], 9);
    }
}
