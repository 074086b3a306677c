//! Minimal operation labels from a (source, target) sentence pair.
//!
//! If the two sentences are permutations of each other, a single two-block
//! swap is attempted first: the longest common substring and the longest one
//! disjoint from it are exchanged in the source, and failing that every
//! exchange of two blocks spanning the differing middle is tried. Otherwise
//! the labels come from the unit-cost alignment in [`crate::align`], taking
//! the optimal path that yields the fewest items, with each maximal run of
//! non-copy steps folded into one item.

use std::collections::HashMap;

use crate::align::{hunks, EditPathMatrix};
use crate::error::{Error, Result};
use crate::model::{apply_reference, op_count, Insert, Modify, Reference, Sentence};

/// A common substring occurrence: `len` characters at `src` in the source and
/// `tgt` in the target.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Occurrence {
    pub src: usize,
    pub tgt: usize,
    pub len: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CommonSubstringPair {
    pub s1: Occurrence,
    /// Absent when nothing common remains outside `s1`.
    pub s2: Option<Occurrence>,
}

/// Longest common substring `s1` and the longest common substring whose
/// occurrences avoid `s1` in both strings. Ties go to the leftmost start in
/// the source, then in the target.
pub fn longest_common_substring_pair(s: &[char], t: &[char]) -> Result<CommonSubstringPair> {
    let (n, m) = (s.len(), t.len());
    // run[i][j] = length of the common run starting at s[i], t[j]
    let mut run = vec![0usize; (n + 1) * (m + 1)];
    for i in (0..n).rev() {
        for j in (0..m).rev() {
            if s[i] == t[j] {
                run[i * (m + 1) + j] = run[(i + 1) * (m + 1) + j + 1] + 1;
            }
        }
    }
    let at = |i: usize, j: usize| run[i * (m + 1) + j];

    let mut best: Option<Occurrence> = None;
    for i in 0..n {
        for j in 0..m {
            let len = at(i, j);
            if len > best.map_or(0, |b| b.len) {
                best = Some(Occurrence { src: i, tgt: j, len });
            }
        }
    }
    let s1 = best.ok_or(Error::NoCommonSubstring)?;

    // Longest run that fits before s1 or starts after it, in both strings.
    let room = |start: usize, lo: usize, hi: usize| -> usize {
        if start < lo {
            lo - start
        } else if start >= hi {
            usize::MAX
        } else {
            0
        }
    };
    let mut second: Option<Occurrence> = None;
    for i in 0..n {
        let si = room(i, s1.src, s1.src + s1.len);
        if si == 0 {
            continue;
        }
        for j in 0..m {
            let tj = room(j, s1.tgt, s1.tgt + s1.len);
            let len = at(i, j).min(si).min(tj);
            if len > second.map_or(0, |b| b.len) {
                second = Some(Occurrence { src: i, tgt: j, len });
            }
        }
    }
    Ok(CommonSubstringPair { s1, s2: second })
}

fn char_frequencies(s: &[char]) -> HashMap<char, usize> {
    let mut f = HashMap::new();
    for &c in s {
        *f.entry(c).or_insert(0) += 1;
    }
    f
}

/// Order that exchanges two disjoint blocks of a `len`-long sequence.
fn block_swap_order(len: usize, a: (usize, usize), b: (usize, usize)) -> Vec<usize> {
    let (first, second) = if a.0 <= b.0 { (a, b) } else { (b, a) };
    let (f0, f1) = (first.0, first.0 + first.1);
    let (s0, s1) = (second.0, second.0 + second.1);
    (0..f0)
        .chain(s0..s1)
        .chain(f1..s0)
        .chain(f0..f1)
        .chain(s1..len)
        .collect()
}

fn swap_attempt(s: &[char], t: &[char]) -> Option<Vec<usize>> {
    let pair = longest_common_substring_pair(s, t).ok()?;
    let s2 = pair.s2?;
    let order = block_swap_order(s.len(), (pair.s1.src, pair.s1.len), (s2.src, s2.len));
    let swapped = order.iter().map(|&i| s[i]);
    swapped.eq(t.iter().copied()).then_some(order)
}

/// Exchange of a leading and a trailing block of `s` (with anything between
/// them left in place) that yields `t`. Shorter leading blocks are tried
/// first, then shorter trailing blocks.
fn flush_swap(s: &[char], t: &[char]) -> Option<Vec<usize>> {
    let n = s.len();
    for a in 1..n {
        if s[..a] != t[n - a..] {
            continue;
        }
        for b in 1..=n - a {
            if s[n - b..] == t[..b] && s[a..n - b] == t[b..n - a] {
                return Some(block_swap_order(n, (0, a), (n - b, b)));
            }
        }
    }
    None
}

/// Tries to turn `s` into `t` with one switch that exchanges two blocks.
///
/// The exchange of the longest common substring pair is attempted on the
/// full sentences, then on the region left after stripping the common prefix
/// and suffix. If both miss, every exchange of a block at the start of that
/// region with a block at its end is tried. Any two-block exchange producing
/// `t` can be narrowed to one of that form, so `None` means no two-block
/// exchange exists.
pub fn try_switch_derivation(s: &Sentence, t: &Sentence) -> Result<Option<Reference>> {
    let (sc, tc) = (s.chars(), t.chars());
    if char_frequencies(sc) != char_frequencies(tc) {
        return Err(Error::PreconditionViolated(
            "source and target character frequencies differ".into(),
        ));
    }
    if sc == tc {
        return Ok(None);
    }
    if let Some(order) = swap_attempt(sc, tc) {
        return Ok(Some(Reference::switch(order)));
    }

    let n = sc.len();
    let prefix = sc.iter().zip(tc).take_while(|(a, b)| a == b).count();
    let suffix = sc[prefix..]
        .iter()
        .rev()
        .zip(tc[prefix..].iter().rev())
        .take_while(|(a, b)| a == b)
        .count();
    let (lo, hi) = (prefix, n - suffix);
    let (sm, tm) = (&sc[lo..hi], &tc[lo..hi]);
    let mid = if lo == 0 && hi == n {
        flush_swap(sm, tm)
    } else {
        swap_attempt(sm, tm).or_else(|| flush_swap(sm, tm))
    };
    Ok(mid.map(|mid| {
        let order = (0..lo).chain(mid.into_iter().map(|i| i + lo)).chain(hi..n).collect();
        Reference::switch(order)
    }))
}

/// Minimal operation labels turning `s` into `t`.
///
/// Returns the empty reference when the sentences are equal. Fails only when
/// `s` is empty and `t` is not, since insertions need an anchor character.
pub fn derive_operations(s: &Sentence, t: &Sentence) -> Result<Reference> {
    if s == t {
        return Ok(Reference::empty());
    }
    if s.is_empty() {
        return Err(Error::EmptySource);
    }
    if let Ok(Some(r)) = try_switch_derivation(s, t) {
        return Ok(r);
    }
    Ok(levenshtein_reference(s, t))
}

/// Labels from the alignment alone, without the switch attempt.
pub fn levenshtein_reference(s: &Sentence, t: &Sentence) -> Reference {
    let (sc, tc) = (s.chars(), t.chars());
    let matrix = EditPathMatrix::new(sc, tc);
    let mut r = Reference::empty();
    for h in hunks(&matrix.backtrack_fewest_items()) {
        let label = &tc[h.tgt_start..h.tgt_start + h.tgt_len];
        if h.tgt_len == 0 {
            r.deletes.extend(h.src_start..h.src_start + h.src_len);
        } else if h.src_len > 0 {
            r.modifies.push(Modify {
                pos: h.src_start,
                span: h.src_len,
                label: label.to_vec(),
            });
        } else if h.src_start > 0 {
            r.inserts.push(Insert {
                pos: h.src_start - 1,
                count: label.len(),
                label: label.to_vec(),
            });
        } else {
            // Nothing precedes a leading insertion; fold it into the first
            // character, which the path copies.
            let mut label = label.to_vec();
            label.push(sc[0]);
            r.modifies.push(Modify {
                pos: 0,
                span: 1,
                label,
            });
        }
    }
    r.modifies.sort_by_key(|m| m.pos);
    r
}

/// Rewrites an annotated reference into minimal form with the same output.
///
/// A modify whose label is much shorter than its span can beat the derived
/// form, which only labels alignment hunks; such a reference is kept as is.
pub fn normalize_reference(s: &Sentence, r: &Reference) -> Result<Reference> {
    let target = apply_reference(s, r)?;
    let derived = derive_operations(s, &target)?;
    if op_count(r) < op_count(&derived) {
        Ok(r.clone())
    } else {
        Ok(derived)
    }
}

#[cfg(test)]
mod tests {
    use super::*;


    fn sent(s: &str) -> Sentence {
        Sentence::new(s)
    }

    fn chars(s: &str) -> Vec<char> {
        s.chars().collect()
    }

    #[test]
    fn lcs_pair_examples() {
        let p = longest_common_substring_pair(&chars("ABCDE"), &chars("ACBDE")).unwrap();
        assert_eq!(p.s1, Occurrence { src: 3, tgt: 3, len: 2 });
        assert_eq!(p.s2, Some(Occurrence { src: 0, tgt: 0, len: 1 }));

        let p = longest_common_substring_pair(&chars("ABAB"), &chars("ABAB")).unwrap();
        assert_eq!(p.s1.len, 4);
        assert_eq!(p.s2, None);

        assert_eq!(
            longest_common_substring_pair(&chars("XY"), &chars("AB")),
            Err(Error::NoCommonSubstring)
        );
    }

    #[test]
    fn switch_examples() {
        let r = try_switch_derivation(&sent("ABCDE"), &sent("ACBDE")).unwrap().unwrap();
        assert_eq!(r, Reference::switch(vec![0, 2, 1, 3, 4]));
        let r = try_switch_derivation(&sent("AABB"), &sent("BBAA")).unwrap().unwrap();
        assert_eq!(r, Reference::switch(vec![2, 3, 0, 1]));
        assert_eq!(try_switch_derivation(&sent("ABCDE"), &sent("ABCDE")).unwrap(), None);
        assert!(matches!(
            try_switch_derivation(&sent("ABC"), &sent("ABD")),
            Err(Error::PreconditionViolated(_))
        ));
    }

    #[test]
    fn derive_examples() {
        assert_eq!(derive_operations(&sent("ABCDE"), &sent("ABCDE")).unwrap(), Reference::empty());
        assert_eq!(
            derive_operations(&sent("ABCDE"), &sent("ABFCDE")).unwrap(),
            Reference::insert(vec![Insert::new(1, "F")])
        );
        assert_eq!(
            derive_operations(&sent("ABCDE"), &sent("ABCE")).unwrap(),
            Reference::delete(vec![3])
        );
        assert_eq!(
            derive_operations(&sent("AXXE"), &sent("AYYYE")).unwrap(),
            Reference::modify(vec![Modify::new(1, 2, "YYY")])
        );
        assert_eq!(
            derive_operations(&sent("ABCDE"), &sent("ABFDE")).unwrap(),
            Reference::modify(vec![Modify::new(2, 1, "F")])
        );
    }

    #[test]
    fn exchange_found_when_common_substring_pair_misses() {
        let (s, t) = (sent("CCACAA"), sent("AACACC"));
        let r = try_switch_derivation(&s, &t).unwrap().unwrap();
        assert_eq!(apply_reference(&s, &r).unwrap(), t);
        assert_eq!(try_switch_derivation(&sent("ABCD"), &sent("DBAC")).unwrap(), None);
    }

    #[test]
    fn alignment_with_fewest_items_wins() {
        assert_eq!(
            derive_operations(&sent("CB"), &sent("CCA")).unwrap(),
            Reference::modify(vec![Modify::new(1, 1, "CA")])
        );
        assert_eq!(
            derive_operations(&sent("B"), &sent("BBD")).unwrap(),
            Reference::insert(vec![Insert::new(0, "BD")])
        );
    }

    #[test]
    fn leading_insertion_folds_into_first_character() {
        let s = sent("ABC");
        let t = sent("XYABC");
        let r = derive_operations(&s, &t).unwrap();
        assert_eq!(r, Reference::modify(vec![Modify::new(0, 1, "XYA")]));
        assert_eq!(apply_reference(&s, &r).unwrap(), t);
    }

    #[test]
    fn empty_source_and_empty_target() {
        assert_eq!(derive_operations(&sent(""), &sent("A")), Err(Error::EmptySource));
        let r = derive_operations(&sent("AB"), &sent("")).unwrap();
        assert_eq!(r, Reference::delete(vec![0, 1]));
    }

    #[test]
    fn normalize_examples() {
        let s = sent("ABCDE");
        let noop = Reference::modify(vec![Modify::new(2, 1, "C")]);
        assert_eq!(normalize_reference(&s, &noop).unwrap(), Reference::empty());

        let split = Reference::insert(vec![Insert::new(1, "F"), Insert::new(1, "G")]);
        let n = normalize_reference(&s, &split).unwrap();
        assert_eq!(n, Reference::insert(vec![Insert::new(1, "FG")]));
        assert!(op_count(&n) < op_count(&split));

        let sw = Reference::switch(vec![0, 2, 1, 3, 4]);
        assert_eq!(normalize_reference(&s, &sw).unwrap(), sw);

        assert!(normalize_reference(&s, &Reference::delete(vec![9])).is_err());

        let s = sent("ABCDEFG");
        let loose = Reference::modify(vec![Modify::new(2, 4, "XD")]);
        assert_eq!(normalize_reference(&s, &loose).unwrap(), loose);
    }

    #[test]
    fn swap_found_after_trimming_shared_context() {
        // Full-string LCS is the shared tail, which hides the swapped blocks.
        let s = sent("QABXYZW");
        let t = sent("QBAXYZW");
        let r = derive_operations(&s, &t).unwrap();
        assert_eq!(r, Reference::switch(vec![0, 2, 1, 3, 4, 5, 6]));
    }
}
