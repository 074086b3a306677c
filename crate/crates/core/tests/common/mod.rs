//! Generators and independent reference implementations shared by the
//! integration tests. Nothing here calls into the library's algorithms.

#![allow(dead_code)]

use opedit_core::{Insert, Modify, Reference, Sentence};
use rand::seq::SliceRandom;
use rand::Rng;

pub const ALPHABET: &[char] = &[
    'a', 'b', 'c', 'd', 'e', 'f', 'g', 'h', 'i', 'j', 'k', 'l', 'm', 'n', 'o', 'p', 'q', 'r', 's', 't',
];

pub fn random_string<R: Rng>(rng: &mut R, len: usize, alphabet: &[char]) -> Vec<char> {
    (0..len).map(|_| *alphabet.choose(rng).unwrap()).collect()
}

/// A valid reference for a sentence of length `n` whose tags fit `t_max`.
///
/// Modify labels are at most 3 characters, and an insertion anchored on the
/// last character of a modify span is shortened so that label plus insertion
/// never exceed `t_max + 1` characters.
pub fn random_reference<R: Rng>(rng: &mut R, n: usize, t_max: usize, alphabet: &[char]) -> Reference {
    let mut r = Reference::empty();
    if n >= 2 && rng.gen_bool(0.3) {
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(rng);
        r.switch = Some(order);
    }
    // span_end[i] = Some(label length) when i is the last character of a modify span
    let mut span_last: Vec<Option<usize>> = vec![None; n];
    let mut inside: Vec<bool> = vec![false; n];
    let mut i = 0;
    while i < n {
        let roll: f64 = rng.gen();
        if roll < 0.15 {
            r.deletes.push(i);
            i += 1;
        } else if roll < 0.3 {
            let span = rng.gen_range(1..=3.min(n - i));
            let m = rng.gen_range(1..=3);
            let label = random_string(rng, m, alphabet);
            for k in i..i + span - 1 {
                inside[k] = true;
            }
            span_last[i + span - 1] = Some(m);
            r.modifies.push(Modify {
                pos: i,
                span,
                label,
            });
            i += span;
        } else {
            i += 1;
        }
    }
    for p in 0..n {
        if inside[p] || !rng.gen_bool(0.15) {
            continue;
        }
        let cap = match span_last[p] {
            Some(m) => (t_max + 1).saturating_sub(m),
            None => t_max,
        };
        if cap == 0 {
            continue;
        }
        let count = rng.gen_range(1..=cap);
        r.inserts.push(Insert {
            pos: p,
            count,
            label: random_string(rng, count, alphabet),
        });
    }
    r
}

/// Straightforward interpreter: build the text each original character
/// contributes, then concatenate those pieces in switch order.
pub fn naive_apply(s: &[char], r: &Reference) -> Vec<char> {
    let n = s.len();
    let mut piece: Vec<Vec<char>> = s.iter().map(|&c| vec![c]).collect();
    for &d in &r.deletes {
        piece[d].clear();
    }
    for m in &r.modifies {
        piece[m.pos] = m.label.clone();
        for p in m.pos + 1..m.pos + m.span {
            piece[p].clear();
        }
    }
    for ins in &r.inserts {
        piece[ins.pos].extend(ins.label.iter().copied());
    }
    let order: Vec<usize> = r.switch.clone().unwrap_or_else(|| (0..n).collect());
    order.iter().flat_map(|&i| piece[i].clone()).collect()
}

/// Classic two-row Levenshtein distance.
pub fn levenshtein(a: &[char], b: &[char]) -> usize {
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    for (i, ca) in a.iter().enumerate() {
        let mut cur = vec![i + 1; b.len() + 1];
        for (j, cb) in b.iter().enumerate() {
            let sub = prev[j] + usize::from(ca != cb);
            cur[j + 1] = sub.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        prev = cur;
    }
    prev[b.len()]
}

/// Every way of exchanging two non-overlapping blocks of `s`
/// (`P B1 M B2 Q → P B2 M B1 Q`, `M` possibly empty) that yields `t`.
/// Returns the first induced index order found.
pub fn block_swap_oracle(s: &[char], t: &[char]) -> Option<Vec<usize>> {
    let n = s.len();
    if n != t.len() || s == t {
        return None;
    }
    for a in 0..n {
        for b in a + 1..=n {
            for c in b..n {
                for d in c + 1..=n {
                    let mut order: Vec<usize> = (0..a).collect();
                    order.extend(c..d);
                    order.extend(b..c);
                    order.extend(a..b);
                    order.extend(d..n);
                    if order.iter().map(|&i| s[i]).eq(t.iter().copied()) {
                        return Some(order);
                    }
                }
            }
        }
    }
    None
}

#[derive(Clone, Copy, PartialEq, Eq, Hash)]
enum Open {
    None,
    Deletes(usize),
    Mixed,
}

impl Open {
    fn close(self) -> usize {
        match self {
            Open::None => 0,
            Open::Deletes(d) => d,
            Open::Mixed => 1,
        }
    }
}

/// Fewest operations of any switch-free reference whose character cost is
/// the Levenshtein distance: the minimum over every optimal alignment of the
/// summed cost of its maximal non-copy runs, where a pure deletion run of
/// `d` characters costs `d` and any other run costs one item.
pub fn min_tight_op_count(s: &[char], t: &[char]) -> usize {
    let (n, m) = (s.len(), t.len());
    let mut dist = vec![vec![0usize; m + 1]; n + 1];
    for i in 0..=n {
        for j in 0..=m {
            dist[i][j] = if i == 0 {
                j
            } else if j == 0 {
                i
            } else {
                (dist[i - 1][j - 1] + usize::from(s[i - 1] != t[j - 1]))
                    .min(dist[i - 1][j] + 1)
                    .min(dist[i][j - 1] + 1)
            };
        }
    }
    let mut memo = std::collections::HashMap::new();
    best_from(n, m, Open::None, s, t, &dist, &mut memo)
}

fn best_from(
    i: usize,
    j: usize,
    open: Open,
    s: &[char],
    t: &[char],
    dist: &[Vec<usize>],
    memo: &mut std::collections::HashMap<(usize, usize, Open), usize>,
) -> usize {
    if i == 0 && j == 0 {
        return open.close();
    }
    if let Some(&v) = memo.get(&(i, j, open)) {
        return v;
    }
    let mut best = usize::MAX;
    let d = dist[i][j];
    if i > 0 && j > 0 && s[i - 1] == t[j - 1] && dist[i - 1][j - 1] == d {
        best = best.min(open.close() + best_from(i - 1, j - 1, Open::None, s, t, dist, memo));
    }
    if i > 0 && j > 0 && s[i - 1] != t[j - 1] && dist[i - 1][j - 1] + 1 == d {
        best = best.min(best_from(i - 1, j - 1, Open::Mixed, s, t, dist, memo));
    }
    if i > 0 && dist[i - 1][j] + 1 == d {
        let next = match open {
            Open::None => Open::Deletes(1),
            Open::Deletes(k) => Open::Deletes(k + 1),
            Open::Mixed => Open::Mixed,
        };
        best = best.min(best_from(i - 1, j, next, s, t, dist, memo));
    }
    if j > 0 && dist[i][j - 1] + 1 == d {
        best = best.min(best_from(i, j - 1, Open::Mixed, s, t, dist, memo));
    }
    memo.insert((i, j, open), best);
    best
}

pub fn sentence(chars: &[char]) -> Sentence {
    Sentence::from_chars(chars.to_vec())
}

/// All permutations of `0..n` in lexicographic order.
pub fn permutations(n: usize) -> Vec<Vec<usize>> {
    fn rec(cur: &mut Vec<usize>, used: &mut Vec<bool>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == used.len() {
            out.push(cur.clone());
            return;
        }
        for i in 0..used.len() {
            if !used[i] {
                used[i] = true;
                cur.push(i);
                rec(cur, used, out);
                cur.pop();
                used[i] = false;
            }
        }
    }
    let mut out = Vec::new();
    rec(&mut Vec::new(), &mut vec![false; n], &mut out);
    out
}
