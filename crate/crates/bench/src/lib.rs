//! Seeded inputs for the benchmarks.

use ndarray::Array2;
use opedit_core::stg::{attention_scores, ScoreMatrix};
use opedit_core::Sentence;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const CHARS: &[char] = &[
    '的', '一', '是', '在', '不', '了', '有', '和', '人', '这', '中', '大', '为', '上', '个', '国', '我', '以', '要', '他',
    '时', '来', '用', '们', '生', '到', '作', '地', '于', '出', '就', '分', '对', '成', '会', '可', '主', '发', '年', '动',
];

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn sentence<R: Rng>(rng: &mut R, len: usize) -> Vec<char> {
    (0..len).map(|_| *CHARS.choose(rng).unwrap()).collect()
}

/// A source of `len` characters and a target produced by `edits` random
/// local edits, or by a single block exchange when `switch` is set.
pub fn pair<R: Rng>(rng: &mut R, len: usize, edits: usize, switch: bool) -> (Sentence, Sentence) {
    let src = sentence(rng, len);
    let mut tgt = src.clone();
    if switch && len >= 4 {
        let a = rng.gen_range(0..len - 3);
        let m = rng.gen_range(a + 1..len - 1);
        let b = rng.gen_range(m + 1..len);
        tgt[a..b].rotate_left(m - a);
    } else {
        for _ in 0..edits {
            let i = rng.gen_range(0..tgt.len().max(1));
            match rng.gen_range(0..3) {
                0 if tgt.len() > 1 => {
                    tgt.remove(i);
                }
                1 => tgt.insert(i, *CHARS.choose(rng).unwrap()),
                _ if !tgt.is_empty() => tgt[i] = *CHARS.choose(rng).unwrap(),
                _ => {}
            }
        }
    }
    (Sentence::from_chars(src), Sentence::from_chars(tgt))
}

/// Successor scores for `n` characters from random attention projections.
pub fn scores<R: Rng>(rng: &mut R, n: usize, dim: usize) -> ScoreMatrix {
    let q = Array2::from_shape_fn((n + 2, dim), |_| rng.gen_range(-1.0..1.0));
    let k = Array2::from_shape_fn((n + 2, dim), |_| rng.gen_range(-1.0..1.0));
    ScoreMatrix::new(attention_scores(&q, &k).unwrap()).unwrap()
}
