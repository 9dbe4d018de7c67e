//! Interval assignment: labels for closed intervals, the predecessor links
//! that chain them, and checkers for the three label properties.
//!
//! Indices are 0-based here; the CLI prints them 1-based.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum IapError {
    #[error("interval {0} has a > b")]
    Reversed(usize),
    #[error("left endpoints must be strictly increasing (interval {0})")]
    Unordered(usize),
    #[error("interval index {0} out of range")]
    OutOfRange(usize),
    #[error("label vector has length {got}, expected {want}")]
    LabelCount { got: usize, want: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IapInstance {
    intervals: Vec<(i64, i64)>,
    ordered: bool,
}

impl IapInstance {
    /// Instance accepted by the solver: strictly increasing left endpoints.
    pub fn new(intervals: Vec<(i64, i64)>) -> Result<Self, IapError> {
        let mut inst = Self::unordered(intervals)?;
        for k in 1..inst.intervals.len() {
            if inst.intervals[k].0 <= inst.intervals[k - 1].0 {
                return Err(IapError::Unordered(k));
            }
        }
        inst.ordered = true;
        Ok(inst)
    }

    /// Instance for the checkers only; left endpoints may come in any order.
    pub fn unordered(intervals: Vec<(i64, i64)>) -> Result<Self, IapError> {
        if let Some(k) = intervals.iter().position(|(a, b)| a > b) {
            return Err(IapError::Reversed(k));
        }
        Ok(Self {
            intervals,
            ordered: false,
        })
    }

    pub fn len(&self) -> usize {
        self.intervals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    pub fn intervals(&self) -> &[(i64, i64)] {
        &self.intervals
    }

    fn covers(&self, j: usize, i: usize) -> bool {
        let (a, b) = self.intervals[j];
        let x = self.intervals[i].0;
        a <= x && x <= b
    }

    /// N_i: intervals whose closed span contains a_i.
    pub fn coverage(&self, i: usize) -> Result<Vec<usize>, IapError> {
        if i >= self.len() {
            return Err(IapError::OutOfRange(i));
        }
        if self.ordered {
            Ok((0..=i).filter(|&j| self.covers(j, i)).collect())
        } else {
            Ok((0..self.len()).filter(|&j| self.covers(j, i)).collect())
        }
    }

    pub fn coverage_sizes(&self) -> Vec<usize> {
        (0..self.len())
            .map(|i| self.coverage(i).expect("in range").len())
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IapAssignment {
    pub labels: Vec<usize>,
    /// Interval whose coverage set fixed each label.
    pub trigger: Vec<usize>,
    /// Predecessor link: an interval labelled one less.
    pub predecessor: Vec<Option<usize>>,
    /// Chains sorted by length (descending) then smallest member; members ascending.
    pub chains: Vec<Vec<usize>>,
    /// Chains read straight off the predecessor links, same ordering.
    pub link_chains: Vec<Vec<usize>>,
}

/// Which maximizer to take when several remaining intervals tie.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TieBreak {
    LargestIndex,
    SmallestIndex,
}

pub fn solve(inst: &IapInstance) -> IapAssignment {
    solve_with(inst, TieBreak::LargestIndex)
}

pub fn solve_with(inst: &IapInstance, tie: TieBreak) -> IapAssignment {
    assert!(inst.ordered, "solver requires strictly increasing left endpoints");
    let s = inst.len();
    let mut alive = vec![true; s];
    let mut count: Vec<usize> = inst.coverage_sizes();
    let mut labels = vec![0usize; s];
    let mut trigger = vec![0usize; s];
    let mut predecessor: Vec<Option<usize>> = vec![None; s];
    let mut removed: Vec<usize> = Vec::with_capacity(s);
    for _ in 0..s {
        let mut pick: Option<usize> = None;
        for i in (0..s).filter(|&i| alive[i]) {
            pick = match pick {
                None => Some(i),
                Some(p) if count[i] > count[p] => Some(i),
                Some(p) if count[i] == count[p] && tie == TieBreak::LargestIndex => Some(i.max(p)),
                keep => keep,
            };
        }
        let i = pick.expect("some interval remains");
        let j = (0..=i)
            .find(|&j| alive[j] && inst.covers(j, i))
            .expect("i covers itself");
        labels[j] = count[i];
        trigger[j] = i;
        for &k in &removed {
            if labels[k] == labels[j] + 1 && inst.covers(j, trigger[k]) {
                predecessor[k] = Some(j);
            }
        }
        alive[j] = false;
        removed.push(j);
        for (x, c) in count.iter_mut().enumerate().skip(j) {
            if inst.covers(j, x) {
                *c -= 1;
            }
        }
    }
    let link_chains = chains_from_links(&predecessor);
    let chains = nested_chains(inst, &labels).unwrap_or_else(|| link_chains.clone());
    IapAssignment {
        labels,
        trigger,
        predecessor,
        chains,
        link_chains,
    }
}

/// Chains obtained by following predecessor links from intervals that are
/// nobody's predecessor.
pub fn chains_from_links(predecessor: &[Option<usize>]) -> Vec<Vec<usize>> {
    let s = predecessor.len();
    let mut is_pred = vec![false; s];
    for p in predecessor.iter().flatten() {
        is_pred[*p] = true;
    }
    let mut chains: Vec<Vec<usize>> = Vec::new();
    for head in (0..s).filter(|&k| !is_pred[k]) {
        let mut chain = vec![head];
        let mut cur = head;
        while let Some(p) = predecessor[cur] {
            if chain.contains(&p) {
                break;
            }
            chain.push(p);
            cur = p;
        }
        chain.sort_unstable();
        chains.push(chain);
    }
    chains.sort_by(|a, b| b.len().cmp(&a.len()).then(a[0].cmp(&b[0])));
    chains
}

/// Chains grown top-down: a head takes the lowest-index free interval one
/// label below whose left endpoint it covers, or failing that any free one.
pub fn nested_chains(inst: &IapInstance, labels: &[usize]) -> Option<Vec<Vec<usize>>> {
    if labels.len() != inst.len() || !admits_partition(labels) {
        return None;
    }
    let s = labels.len();
    let mut order: Vec<usize> = (0..s).collect();
    order.sort_by_key(|&k| (std::cmp::Reverse(labels[k]), k));
    let mut used = vec![false; s];
    let mut chains = Vec::new();
    for head in order {
        if used[head] {
            continue;
        }
        used[head] = true;
        let mut chain = vec![head];
        let mut cur = head;
        while labels[cur] > 1 {
            let want = labels[cur] - 1;
            let free = |j: &usize| !used[*j] && labels[*j] == want;
            let next = (0..s)
                .filter(free)
                .find(|&j| inst.covers(cur, j))
                .or_else(|| (0..s).find(free))?;
            used[next] = true;
            chain.push(next);
            cur = next;
        }
        chain.sort_unstable();
        chains.push(chain);
    }
    chains.sort_by(|a, b| b.len().cmp(&a.len()).then(a[0].cmp(&b[0])));
    Some(chains)
}

fn check_len(inst: &IapInstance, labels: &[usize]) -> Result<(), IapError> {
    if labels.len() != inst.len() {
        return Err(IapError::LabelCount {
            got: labels.len(),
            want: inst.len(),
        });
    }
    Ok(())
}

/// The k-th smallest label inside every coverage set is at least k.
pub fn check_local_dominance(inst: &IapInstance, labels: &[usize]) -> Result<bool, IapError> {
    check_len(inst, labels)?;
    for i in 0..inst.len() {
        let mut l: Vec<usize> = inst.coverage(i)?.iter().map(|&j| labels[j]).collect();
        l.sort_unstable();
        if l.iter().enumerate().any(|(k, &v)| v < k + 1) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Σ f(Î) ≥ Σ f(|N|) for every decreasing concave f, tested on the basis
/// f(k) = −k and f(k) = −(k − m)_+.
pub fn check_global_dominance(inst: &IapInstance, labels: &[usize]) -> Result<bool, IapError> {
    check_len(inst, labels)?;
    let cov = inst.coverage_sizes();
    if labels.iter().sum::<usize>() > cov.iter().sum::<usize>() {
        return Ok(false);
    }
    let top = labels.iter().chain(&cov).copied().max().unwrap_or(0);
    for m in 1..=top {
        let excess = |v: &[usize]| v.iter().map(|&x| x.saturating_sub(m)).sum::<usize>();
        if excess(labels) > excess(&cov) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// The chains partition all intervals and each carries labels {1..len}.
pub fn check_partition_monotonicity(labels: &[usize], chains: &[Vec<usize>]) -> bool {
    let s = labels.len();
    let mut seen = vec![false; s];
    for chain in chains {
        let mut l = Vec::with_capacity(chain.len());
        for &k in chain {
            if k >= s || seen[k] {
                return false;
            }
            seen[k] = true;
            l.push(labels[k]);
        }
        l.sort_unstable();
        if l.iter().enumerate().any(|(k, &v)| v != k + 1) {
            return false;
        }
    }
    seen.iter().all(|&x| x)
}

/// Whether any partition into chains with labels {1..len} exists.
///
/// Such a partition exists iff the number of intervals labelled m is
/// non-increasing in m.
pub fn admits_partition(labels: &[usize]) -> bool {
    let top = labels.iter().copied().max().unwrap_or(0);
    let mut counts = vec![0usize; top + 2];
    for &l in labels {
        if l == 0 {
            return false;
        }
        counts[l] += 1;
    }
    (1..=top).all(|m| counts[m] >= counts[m + 1])
}

/// Greedy partition for labels that admit one: each label-m interval is
/// appended to an open chain ending at label m − 1.
pub fn greedy_partition(labels: &[usize]) -> Option<Vec<Vec<usize>>> {
    if !admits_partition(labels) {
        return None;
    }
    let mut order: Vec<usize> = (0..labels.len()).collect();
    order.sort_by_key(|&k| (labels[k], k));
    let mut chains: Vec<Vec<usize>> = Vec::new();
    for k in order {
        if labels[k] == 1 {
            chains.push(vec![k]);
        } else {
            let c = chains.iter_mut().find(|c| c.len() == labels[k] - 1)?;
            c.push(k);
        }
    }
    for c in &mut chains {
        c.sort_unstable();
    }
    Some(chains)
}
