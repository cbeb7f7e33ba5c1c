//! Sequence identity under global alignment and greedy clustering.

use alloc::vec;
use alloc::vec::Vec;

const MATCH: i32 = 1;
const MISMATCH: i32 = 0;
const GAP: i32 = -1;

/// Matches divided by alignment length for an optimal global alignment
/// with linear gaps. Ties in the traceback prefer the diagonal, then a gap
/// in `b`, then a gap in `a`.
pub fn global_identity(a: &[u8], b: &[u8]) -> f64 {
    let (n, m) = (a.len(), b.len());
    if n == 0 && m == 0 {
        return 1.0;
    }
    let w = m + 1;
    let mut s = vec![0i32; (n + 1) * w];
    for i in 1..=n {
        s[i * w] = i as i32 * GAP;
    }
    for j in 1..=m {
        s[j] = j as i32 * GAP;
    }
    let sub = |i: usize, j: usize| if a[i - 1] == b[j - 1] { MATCH } else { MISMATCH };
    for i in 1..=n {
        for j in 1..=m {
            let diag = s[(i - 1) * w + j - 1] + sub(i, j);
            let up = s[(i - 1) * w + j] + GAP;
            let left = s[i * w + j - 1] + GAP;
            s[i * w + j] = diag.max(up).max(left);
        }
    }
    let (mut i, mut j) = (n, m);
    let (mut matches, mut len) = (0usize, 0usize);
    while i > 0 || j > 0 {
        len += 1;
        let here = s[i * w + j];
        if i > 0 && j > 0 && here == s[(i - 1) * w + j - 1] + sub(i, j) {
            matches += (a[i - 1] == b[j - 1]) as usize;
            i -= 1;
            j -= 1;
        } else if i > 0 && here == s[(i - 1) * w + j] + GAP {
            i -= 1;
        } else {
            j -= 1;
        }
    }
    matches as f64 / len as f64
}

/// Greedy longest-first clustering. Cluster ids are assigned in order of
/// creation; ties in length keep input order.
pub fn cluster_sequences<S: AsRef<[u8]>>(sequences: &[S], threshold: f64) -> Vec<usize> {
    let mut order: Vec<usize> = (0..sequences.len()).collect();
    order.sort_by_key(|&i| core::cmp::Reverse(sequences[i].as_ref().len()));
    let mut reps: Vec<usize> = Vec::new();
    let mut out = vec![0; sequences.len()];
    for i in order {
        let s = sequences[i].as_ref();
        match reps
            .iter()
            .position(|&r| global_identity(sequences[r].as_ref(), s) >= threshold)
        {
            Some(c) => out[i] = c,
            None => {
                out[i] = reps.len();
                reps.push(i);
            }
        }
    }
    out
}

/// Representative (first, longest member) of each cluster.
pub fn representatives<S: AsRef<[u8]>>(sequences: &[S], ids: &[usize]) -> Vec<usize> {
    let k = ids.iter().max().map_or(0, |m| m + 1);
    let mut reps = vec![usize::MAX; k];
    let mut order: Vec<usize> = (0..sequences.len()).collect();
    order.sort_by_key(|&i| core::cmp::Reverse(sequences[i].as_ref().len()));
    for i in order {
        if reps[ids[i]] == usize::MAX {
            reps[ids[i]] = i;
        }
    }
    reps
}
