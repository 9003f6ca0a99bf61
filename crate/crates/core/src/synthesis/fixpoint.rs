use super::{SafeSet, TransitionTable};

/// Counters of a fixpoint run.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct FixpointStats {
    /// Sweeps that removed at least one cell.
    pub sweeps: usize,
    pub removed: usize,
}

// Removal state: per (cell, action) the number of successors outside the
// current set, with an escape counting as one.
struct Removal<'a> {
    tt: &'a TransitionTable,
    safe: SafeSet,
    bad: Vec<u32>,
    good_actions: Vec<u32>,
    // predecessors in CSR form: pairs (cell * actions + action) per target
    pred_offsets: Vec<usize>,
    preds: Vec<u32>,
}

impl<'a> Removal<'a> {
    fn new(tt: &'a TransitionTable, init: &SafeSet) -> Self {
        let n = tt.cell_count();
        let a = tt.action_count();
        assert_eq!(init.cell_count(), n, "safe set and table differ in size");
        let mut bad = vec![0u32; n * a];
        let mut good_actions = vec![0u32; n];
        let mut counts = vec![0usize; n + 1];
        for c in 0..n {
            for act in 0..a {
                let succ = tt.successors(c, act);
                let mut b = tt.escapes(c, act) as u32;
                for &t in succ {
                    counts[t as usize + 1] += 1;
                    if !init.contains(t as usize) {
                        b += 1;
                    }
                }
                bad[c * a + act] = b;
                if b == 0 {
                    good_actions[c] += 1;
                }
            }
        }
        for i in 0..n {
            counts[i + 1] += counts[i];
        }
        let pred_offsets = counts.clone();
        let mut fill = counts;
        let mut preds = vec![0u32; tt.transition_count()];
        for c in 0..n {
            for act in 0..a {
                for &t in tt.successors(c, act) {
                    preds[fill[t as usize]] = (c * a + act) as u32;
                    fill[t as usize] += 1;
                }
            }
        }
        Self { tt, safe: init.clone(), bad, good_actions, pred_offsets, preds }
    }

    fn doomed(&self, c: usize) -> bool {
        self.safe.contains(c) && self.good_actions[c] == 0
    }

    // Remove `c` and return the cells that lost their last good action.
    fn remove(&mut self, c: usize, newly_doomed: &mut Vec<usize>) {
        self.safe.remove(c);
        let a = self.tt.action_count();
        for i in self.pred_offsets[c]..self.pred_offsets[c + 1] {
            let pair = self.preds[i] as usize;
            let p = pair / a;
            self.bad[pair] += 1;
            if self.bad[pair] == 1 {
                self.good_actions[p] -= 1;
                if self.good_actions[p] == 0 && self.safe.contains(p) {
                    newly_doomed.push(p);
                }
            }
        }
    }

    // Synchronous sweeps: sweep i removes every cell that has no action
    // staying in the set left by sweep i - 1.
    fn run(mut self, max_sweeps: usize) -> (SafeSet, FixpointStats) {
        let n = self.tt.cell_count();
        let mut frontier: Vec<usize> = (0..n).filter(|&c| self.doomed(c)).collect();
        let mut stats = FixpointStats::default();
        while !frontier.is_empty() && stats.sweeps < max_sweeps {
            stats.sweeps += 1;
            let mut next = Vec::new();
            for &c in &frontier {
                if self.safe.contains(c) {
                    self.remove(c, &mut next);
                    stats.removed += 1;
                }
            }
            // a cell may have been doomed and removed in the same sweep
            next.retain(|&c| self.safe.contains(c));
            next.sort_unstable();
            next.dedup();
            frontier = next;
        }
        (self.safe, stats)
    }
}

/// Greatest fixpoint: the largest subset of `init` in which every cell has
/// an action whose sampled successors all stay in the subset and none
/// escapes.
pub fn fixpoint(tt: &TransitionTable, init: &SafeSet) -> (SafeSet, FixpointStats) {
    Removal::new(tt, init).run(usize::MAX)
}

/// The set after exactly `k` removal sweeps. Only safe for `k` steps; not a
/// shield unless it happens to be the fixpoint.
pub fn bounded_fixpoint(tt: &TransitionTable, init: &SafeSet, k: usize) -> SafeSet {
    Removal::new(tt, init).run(k).0
}

/// Gauss-Seidel variant visiting cells in `order` and removing them in
/// place, repeated until stable. Same result as [`fixpoint`].
pub fn fixpoint_ordered(tt: &TransitionTable, init: &SafeSet, order: &[usize]) -> SafeSet {
    let mut safe = init.clone();
    let a = tt.action_count();
    let ok = |safe: &SafeSet, c: usize| {
        (0..a).any(|act| !tt.escapes(c, act) && tt.successors(c, act).iter().all(|&t| safe.contains(t as usize)))
    };
    loop {
        let mut changed = false;
        for &c in order {
            if safe.contains(c) && !ok(&safe, c) {
                safe.remove(c);
                changed = true;
            }
        }
        if !changed {
            return safe;
        }
    }
}

/// Per-cell bitmask of the actions whose sampled successors all lie in
/// `safe` without escaping; zero outside `safe`.
pub fn most_permissive(tt: &TransitionTable, safe: &SafeSet) -> Vec<u8> {
    assert!(tt.action_count() <= 8, "masks hold at most 8 actions");
    (0..tt.cell_count())
        .map(|c| {
            if !safe.contains(c) {
                return 0;
            }
            (0..tt.action_count())
                .filter(|&act| {
                    !tt.escapes(c, act) && tt.successors(c, act).iter().all(|&t| safe.contains(t as usize))
                })
                .fold(0u8, |m, act| m | (1 << act))
        })
        .collect()
}
