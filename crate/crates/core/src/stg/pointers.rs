use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Next-character pointer form of a switch order.
///
/// `next[i]` is the index of the character that follows `i` in the output,
/// or [`PointerLabels::end`] (= `n`) for the last character.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PointerLabels {
    pub first: usize,
    pub next: Vec<usize>,
}

impl PointerLabels {
    pub fn len(&self) -> usize {
        self.next.len()
    }

    pub fn is_empty(&self) -> bool {
        self.next.is_empty()
    }

    /// Sentinel marking the end of the chain.
    pub fn end(&self) -> usize {
        self.next.len()
    }
}

fn check_permutation(n: usize, order: &[usize]) -> Result<()> {
    if order.len() != n {
        return Err(Error::InvalidPermutation(format!(
            "expected {n} entries, found {}",
            order.len()
        )));
    }
    let mut seen = vec![false; n];
    for &i in order {
        if i >= n || std::mem::replace(&mut seen[i], true) {
            return Err(Error::InvalidPermutation(format!("index {i} is out of range or repeated")));
        }
    }
    Ok(())
}

/// Converts an output order (`order[k]` = original index at output slot `k`)
/// into next-pointers. The identity is used when `order` is `None`.
pub fn switch_to_pointers(n: usize, order: Option<&[usize]>) -> Result<PointerLabels> {
    let identity: Vec<usize>;
    let order = match order {
        Some(o) => {
            check_permutation(n, o)?;
            o
        }
        None => {
            identity = (0..n).collect();
            &identity
        }
    };
    let mut next = vec![n; n];
    for w in order.windows(2) {
        next[w[0]] = w[1];
    }
    Ok(PointerLabels {
        first: order.first().copied().unwrap_or(n),
        next,
    })
}

/// Follows the pointer chain from `first` back into an output order.
pub fn pointers_to_permutation(p: &PointerLabels) -> Result<Vec<usize>> {
    let n = p.len();
    let end = p.end();
    let mut order = Vec::with_capacity(n);
    let mut seen = vec![false; n];
    let mut cur = p.first;
    while cur != end {
        if cur > end {
            return Err(Error::CycleOrOrphan(format!("pointer {cur} is out of range")));
        }
        if std::mem::replace(&mut seen[cur], true) {
            return Err(Error::CycleOrOrphan(format!("index {cur} is visited twice")));
        }
        order.push(cur);
        cur = p.next[cur];
    }
    if order.len() != n {
        return Err(Error::CycleOrOrphan(format!(
            "chain ends after {} of {n} characters",
            order.len()
        )));
    }
    Ok(order)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn examples() {
        let p = switch_to_pointers(5, Some(&[0, 2, 1, 3, 4])).unwrap();
        assert_eq!(p, PointerLabels { first: 0, next: vec![2, 3, 1, 4, 5] });
        assert_eq!(pointers_to_permutation(&p).unwrap(), vec![0, 2, 1, 3, 4]);

        let id = switch_to_pointers(5, None).unwrap();
        assert_eq!(id, PointerLabels { first: 0, next: vec![1, 2, 3, 4, 5] });

        let p = switch_to_pointers(3, Some(&[2, 0, 1])).unwrap();
        assert_eq!(p, PointerLabels { first: 2, next: vec![1, 3, 0] });
        assert_eq!(pointers_to_permutation(&p).unwrap(), vec![2, 0, 1]);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(matches!(
            switch_to_pointers(3, Some(&[0, 0, 1])),
            Err(Error::InvalidPermutation(_))
        ));
        assert!(matches!(
            switch_to_pointers(3, Some(&[0, 1])),
            Err(Error::InvalidPermutation(_))
        ));
        let cycle = PointerLabels { first: 0, next: vec![1, 0, 3] };
        assert!(matches!(pointers_to_permutation(&cycle), Err(Error::CycleOrOrphan(_))));
        let short = PointerLabels { first: 0, next: vec![3, 2, 3] };
        assert!(matches!(pointers_to_permutation(&short), Err(Error::CycleOrOrphan(_))));
    }

    proptest! {
        #[test]
        fn round_trips(order in (1usize..40).prop_flat_map(|n| Just((0..n).collect::<Vec<_>>()).prop_shuffle())) {
            let p = switch_to_pointers(order.len(), Some(&order)).unwrap();
            prop_assert_eq!(pointers_to_permutation(&p).unwrap(), order);
        }
    }
}
