use std::cmp::Ordering;
use std::collections::HashMap;

use ndarray::{Array2, Axis};

use crate::error::{Error, Result};

pub const DEFAULT_BEAM_WIDTH: usize = 5;

/// Added to every score before taking its logarithm.
pub const LOG_FLOOR: f64 = 1e-12;

/// Row-wise softmax of `Q·Kᵀ / √d`.
pub fn attention_scores(q: &Array2<f64>, k: &Array2<f64>) -> Result<Array2<f64>> {
    if q.ncols() != k.ncols() || q.ncols() == 0 {
        return Err(Error::DimensionMismatch(format!(
            "query width {} vs key width {}",
            q.ncols(),
            k.ncols()
        )));
    }
    let scale = (q.ncols() as f64).sqrt();
    let mut a = q.dot(&k.t()) / scale;
    for mut row in a.axis_iter_mut(Axis(0)) {
        let max = row.fold(f64::NEG_INFINITY, |m, &v| m.max(v));
        row.mapv_inplace(|v| (v - max).exp());
        let sum = row.sum();
        row /= sum;
    }
    Ok(a)
}

/// Successor scores over `n` characters plus two virtual rows/columns:
/// index `n` is the start (BOS) and `n + 1` the end (EOS). Entry `(i, j)`
/// scores "`j` follows `i`".
#[derive(Clone, Debug, PartialEq)]
pub struct ScoreMatrix {
    n: usize,
    scores: Array2<f64>,
}

impl ScoreMatrix {
    pub fn new(scores: Array2<f64>) -> Result<Self> {
        let (r, c) = scores.dim();
        if r != c || r < 3 {
            return Err(Error::DimensionMismatch(format!(
                "score matrix must be square with n + 2 ≥ 3 rows, got {r}×{c}"
            )));
        }
        if let Some(bad) = scores.iter().find(|v| !v.is_finite() || **v < 0.0) {
            return Err(Error::DegenerateMatrix(format!("entry {bad} is not a finite non-negative score")));
        }
        Ok(ScoreMatrix { n: r - 2, scores })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn bos(&self) -> usize {
        self.n
    }

    pub fn eos(&self) -> usize {
        self.n + 1
    }

    pub fn get(&self, from: usize, to: usize) -> f64 {
        self.scores[[from, to]]
    }

    fn log(&self, from: usize, to: usize) -> f64 {
        (self.scores[[from, to]] + LOG_FLOOR).ln()
    }
}

/// Beam width that keeps every (last index, visited set) state, which makes
/// the search exact.
pub fn exhaustive_beam_width(n: usize) -> usize {
    u32::try_from(n)
        .ok()
        .and_then(|s| n.checked_shl(s))
        .unwrap_or(usize::MAX)
}

/// Log score of BOS → order[0] → … → order[n-1] → EOS, summed left to right.
pub fn path_score(a: &ScoreMatrix, order: &[usize]) -> f64 {
    let mut prev = a.bos();
    let mut total = 0.0;
    for &i in order {
        total += a.log(prev, i);
        prev = i;
    }
    total + a.log(prev, a.eos())
}

#[derive(Clone)]
struct Hyp {
    path: Vec<usize>,
    visited: Vec<u64>,
    score: f64,
}

impl Hyp {
    fn last(&self, bos: usize) -> usize {
        self.path.last().copied().unwrap_or(bos)
    }

    fn seen(&self, i: usize) -> bool {
        self.visited[i / 64] & (1 << (i % 64)) != 0
    }
}

fn better(a: &Hyp, b: &Hyp) -> Ordering {
    b.score
        .partial_cmp(&a.score)
        .unwrap_or(Ordering::Equal)
        .then_with(|| a.path.cmp(&b.path))
}

/// Decodes a character order from successor scores.
///
/// Every hypothesis extends only to unvisited characters, so the result is
/// always a full permutation. Hypotheses that reach the same last character
/// with the same visited set are merged, keeping the better one; with
/// `beam ≥ exhaustive_beam_width(n)` this is an exact search.
pub fn beam_decode_permutation(a: &ScoreMatrix, beam: usize) -> Result<Vec<usize>> {
    if beam == 0 {
        return Err(Error::PreconditionViolated("beam width must be at least 1".into()));
    }
    let n = a.len();
    let words = n.div_ceil(64);
    let mut beams = vec![Hyp {
        path: Vec::new(),
        visited: vec![0; words],
        score: 0.0,
    }];

    for _ in 0..n {
        let mut merged: HashMap<(usize, Vec<u64>), Hyp> = HashMap::new();
        for h in &beams {
            let last = h.last(a.bos());
            for j in (0..n).filter(|&j| !h.seen(j)) {
                let mut next = h.clone();
                next.path.push(j);
                next.visited[j / 64] |= 1 << (j % 64);
                next.score += a.log(last, j);
                match merged.entry((j, next.visited.clone())) {
                    std::collections::hash_map::Entry::Occupied(mut e) => {
                        if better(&next, e.get()) == Ordering::Less {
                            e.insert(next);
                        }
                    }
                    std::collections::hash_map::Entry::Vacant(e) => {
                        e.insert(next);
                    }
                }
            }
        }
        let mut pool: Vec<Hyp> = merged.into_values().collect();
        pool.sort_by(better);
        pool.truncate(beam);
        beams = pool;
    }

    for h in &mut beams {
        let last = h.last(a.bos());
        h.score += a.log(last, a.eos());
    }
    beams
        .into_iter()
        .min_by(better)
        .map(|h| h.path)
        .ok_or_else(|| Error::DegenerateMatrix("no complete path survived".into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn attention_examples() {
        let q = array![[1.0], [0.0]];
        let a = attention_scores(&q, &q).unwrap();
        assert!((a[[0, 0]] - 0.7311).abs() < 1e-4);
        assert!((a[[0, 1]] - 0.2689).abs() < 1e-4);
        assert!((a[[1, 0]] - 0.5).abs() < 1e-12);

        let z = Array2::<f64>::zeros((3, 4));
        let a = attention_scores(&z, &z).unwrap();
        assert!(a.iter().all(|v| (v - 1.0 / 3.0).abs() < 1e-12));

        assert!(matches!(
            attention_scores(&Array2::zeros((2, 3)), &Array2::zeros((2, 2))),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn decodes_favoured_two_element_order() {
        // indices: 0, 1, BOS = 2, EOS = 3
        let mut m = Array2::from_elem((4, 4), 0.05);
        m[[2, 1]] = 0.9;
        m[[1, 0]] = 0.9;
        m[[0, 3]] = 0.9;
        let a = ScoreMatrix::new(m).unwrap();
        assert_eq!(beam_decode_permutation(&a, 1).unwrap(), vec![1, 0]);
        assert_eq!(beam_decode_permutation(&a, exhaustive_beam_width(2)).unwrap(), vec![1, 0]);
    }

    #[test]
    fn dominant_successor_chain_gives_identity() {
        let n = 6;
        let mut m = Array2::from_elem((n + 2, n + 2), 0.01);
        m[[n, 0]] = 1.0;
        for i in 0..n - 1 {
            m[[i, i + 1]] = 1.0;
        }
        m[[n - 1, n + 1]] = 1.0;
        let a = ScoreMatrix::new(m).unwrap();
        assert_eq!(beam_decode_permutation(&a, DEFAULT_BEAM_WIDTH).unwrap(), (0..n).collect::<Vec<_>>());
    }

    #[test]
    fn rejects_bad_matrices() {
        assert!(ScoreMatrix::new(Array2::zeros((2, 2))).is_err());
        assert!(ScoreMatrix::new(Array2::zeros((3, 4))).is_err());
        let mut m = Array2::zeros((3, 3));
        m[[0, 0]] = f64::NAN;
        assert!(matches!(ScoreMatrix::new(m), Err(Error::DegenerateMatrix(_))));
    }

    #[test]
    fn zero_scores_still_decode() {
        let a = ScoreMatrix::new(Array2::zeros((5, 5))).unwrap();
        let p = beam_decode_permutation(&a, 2).unwrap();
        assert_eq!(p, vec![0, 1, 2]);
    }
}
