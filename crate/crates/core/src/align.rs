//! Unit-cost character alignment with a deterministic backtrack.
//!
//! Costs: copy 0 (only on equal characters), modify/delete/insert 1. The
//! backtrack starts at `(|s|, |t|)` and at every cell takes the first
//! admissible move in the order Copy, Modify, Delete, Insert, optionally
//! restricted to the moves that keep the number of emitted items minimal.

/// One backtrack move.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Step {
    Copy,
    Modify,
    Delete,
    Insert,
}

impl Step {
    pub const PREFERENCE: [Step; 4] = [Step::Copy, Step::Modify, Step::Delete, Step::Insert];

    /// Displacement applied to `(i, j)` when the move is taken backwards.
    pub fn displacement(self) -> (usize, usize) {
        match self {
            Step::Copy | Step::Modify => (1, 1),
            Step::Delete => (1, 0),
            Step::Insert => (0, 1),
        }
    }

    fn bit(self) -> u8 {
        match self {
            Step::Copy => 1,
            Step::Modify => 2,
            Step::Delete => 4,
            Step::Insert => 8,
        }
    }
}

/// Distance table plus the set of admissible backtrack moves per cell.
#[derive(Clone, Debug)]
pub struct EditPathMatrix {
    rows: usize,
    cols: usize,
    dist: Vec<u32>,
    moves: Vec<u8>,
}

impl EditPathMatrix {
    pub fn new(s: &[char], t: &[char]) -> Self {
        let rows = s.len() + 1;
        let cols = t.len() + 1;
        let mut dist = vec![0u32; rows * cols];
        for i in 0..rows {
            dist[i * cols] = i as u32;
        }
        for j in 0..cols {
            dist[j] = j as u32;
        }
        for i in 1..rows {
            for j in 1..cols {
                let diag = dist[(i - 1) * cols + j - 1] + u32::from(s[i - 1] != t[j - 1]);
                let up = dist[(i - 1) * cols + j] + 1;
                let left = dist[i * cols + j - 1] + 1;
                dist[i * cols + j] = diag.min(up).min(left);
            }
        }

        let mut moves = vec![0u8; rows * cols];
        for i in 0..rows {
            for j in 0..cols {
                let d = dist[i * cols + j];
                let mut m = 0u8;
                if i > 0 && j > 0 {
                    let diag = dist[(i - 1) * cols + j - 1];
                    if s[i - 1] == t[j - 1] && d == diag {
                        m |= Step::Copy.bit();
                    }
                    if s[i - 1] != t[j - 1] && d == diag + 1 {
                        m |= Step::Modify.bit();
                    }
                }
                if i > 0 && d == dist[(i - 1) * cols + j] + 1 {
                    m |= Step::Delete.bit();
                }
                if j > 0 && d == dist[i * cols + j - 1] + 1 {
                    m |= Step::Insert.bit();
                }
                moves[i * cols + j] = m;
            }
        }
        EditPathMatrix {
            rows,
            cols,
            dist,
            moves,
        }
    }

    pub fn distance(&self) -> u32 {
        self.dist[self.rows * self.cols - 1]
    }

    pub fn cell_distance(&self, i: usize, j: usize) -> u32 {
        self.dist[i * self.cols + j]
    }

    pub fn is_admissible(&self, i: usize, j: usize, step: Step) -> bool {
        self.moves[i * self.cols + j] & step.bit() != 0
    }

    pub fn admissible(&self, i: usize, j: usize) -> impl Iterator<Item = Step> + '_ {
        Step::PREFERENCE
            .into_iter()
            .filter(move |&st| self.is_admissible(i, j, st))
    }

    /// Preferred optimal path in forward order. Each entry is the source and
    /// target index *before* the step and the step taken.
    pub fn backtrack(&self) -> Vec<(usize, usize, Step)> {
        let (mut i, mut j) = (self.rows - 1, self.cols - 1);
        let mut path = Vec::with_capacity(i.max(j));
        while i > 0 || j > 0 {
            let step = self
                .admissible(i, j)
                .next()
                .expect("every non-origin cell on an optimal path has a move");
            let (di, dj) = step.displacement();
            i -= di;
            j -= dj;
            path.push((i, j, step));
        }
        path.reverse();
        path
    }

    /// Optimal path whose hunks convert into the fewest operation items:
    /// a hunk of `d` pure deletions counts `d`, any other hunk counts one.
    /// Among equally short labelings the move order of [`Self::backtrack`]
    /// decides.
    pub fn backtrack_fewest_items(&self) -> Vec<(usize, usize, Step)> {
        let items = self.item_costs();
        let at = |i: usize, j: usize, st: Run| items[(i * self.cols + j) * 4 + st as usize];
        let (mut i, mut j) = (self.rows - 1, self.cols - 1);
        let mut run = Run::Closed;
        let mut path = Vec::with_capacity(i.max(j));
        while i > 0 || j > 0 {
            let want = at(i, j, run);
            let (step, next) = self
                .admissible(i, j)
                .flat_map(|st| run.after(st).into_iter().flatten().map(move |(nx, c)| (st, nx, c)))
                .find(|&(st, nx, c)| {
                    let (di, dj) = st.displacement();
                    at(i - di, j - dj, nx).saturating_add(c) == want
                })
                .map(|(st, nx, _)| (st, nx))
                .expect("an optimal continuation exists");
            let (di, dj) = step.displacement();
            i -= di;
            j -= dj;
            run = next;
            path.push((i, j, step));
        }
        path.reverse();
        path
    }

    /// `items[cell][run]`: fewest items needed for the path from `cell` back
    /// to the origin, given the state of the hunk currently open.
    fn item_costs(&self) -> Vec<u32> {
        let mut items = vec![u32::MAX; self.rows * self.cols * 4];
        for i in 0..self.rows {
            for j in 0..self.cols {
                let base = (i * self.cols + j) * 4;
                for run in Run::ALL {
                    let mut v = if i == 0 && j == 0 && run.can_close() { 0 } else { u32::MAX };
                    for st in self.admissible(i, j) {
                        let (di, dj) = st.displacement();
                        let prev = ((i - di) * self.cols + j - dj) * 4;
                        for (nx, c) in run.after(st).into_iter().flatten() {
                            v = v.min(items[prev + nx as usize].saturating_add(c));
                        }
                    }
                    items[base + run as usize] = v;
                }
            }
        }
        items
    }
}

/// State of the hunk being walked through during the fewest-items backtrack.
/// A hunk entered by a deletion is committed to being either pure deletions
/// or mixed; a mixed hunk may close only after a modify or insert step.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Run {
    Closed = 0,
    Deletes = 1,
    MixedPending = 2,
    Mixed = 3,
}

impl Run {
    const ALL: [Run; 4] = [Run::Closed, Run::Deletes, Run::MixedPending, Run::Mixed];

    fn can_close(self) -> bool {
        self != Run::MixedPending
    }

    /// Successor states and the item cost of taking `step` from `self`.
    fn after(self, step: Step) -> [Option<(Run, u32)>; 2] {
        let one = |r, c| [Some((r, c)), None];
        match (self, step) {
            (r, Step::Copy) if r.can_close() => one(Run::Closed, 0),
            (_, Step::Copy) => [None, None],
            (Run::Closed, Step::Delete) => [Some((Run::Deletes, 1)), Some((Run::MixedPending, 1))],
            (Run::Deletes, Step::Delete) => one(Run::Deletes, 1),
            (Run::Deletes, _) => [None, None],
            (Run::Closed, _) => one(Run::Mixed, 1),
            (Run::MixedPending, Step::Delete) => one(Run::MixedPending, 0),
            (_, _) => one(Run::Mixed, 0),
        }
    }
}

/// A maximal run of non-copy steps: `src_len` source characters starting at
/// `src_start` are replaced by `tgt_len` target characters at `tgt_start`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Hunk {
    pub src_start: usize,
    pub src_len: usize,
    pub tgt_start: usize,
    pub tgt_len: usize,
}

pub fn hunks(path: &[(usize, usize, Step)]) -> Vec<Hunk> {
    let mut out: Vec<Hunk> = Vec::new();
    let mut open: Option<Hunk> = None;
    for &(i, j, step) in path {
        if step == Step::Copy {
            out.extend(open.take());
            continue;
        }
        let h = open.get_or_insert(Hunk {
            src_start: i,
            src_len: 0,
            tgt_start: j,
            tgt_len: 0,
        });
        let (di, dj) = step.displacement();
        h.src_len += di;
        h.tgt_len += dj;
    }
    out.extend(open);
    out
}
