//! Combinatorial lower bounds on the minimum station count.
//!
//! Weight-based bounds are computed in exact sixths to avoid float
//! comparisons: the capacity-half weights take values in {0, 1/2, 1} and
//! the thirds weights in {0, 1/3, 1/2, 2/3, 1}.

use std::fmt;

use thiserror::Error;

use crate::expand::feasible_activations;
use crate::instance::Instance;

/// Which reading of the division-aware weight bounds to use.
///
/// `PaperLiteral` sums weights over every subtask option of an unassigned
/// divisible task; that can overshoot the true optimum when mutually
/// exclusive options both carry weight. `Safe` takes the minimum over the
/// task's feasible activations instead, which keeps the bound admissible.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BoundMode {
    #[default]
    Safe,
    PaperLiteral,
}

impl fmt::Display for BoundMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BoundMode::Safe => write!(f, "safe"),
            BoundMode::PaperLiteral => write!(f, "paper_literal"),
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum BoundsError {
    #[error("item of size {0} exceeds bin capacity {1}")]
    ItemExceedsBin(u32, u32),
}

/// All computed lower bounds and their maximum.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BoundReport {
    pub lb1: u32,
    pub lb2: u32,
    pub lb3: u32,
    pub lb_bin: u32,
    pub lb_max: u32,
    pub mode: BoundMode,
}

impl fmt::Display for BoundReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}\t{}\t{}\t{}\t{}\t{}",
            self.lb1, self.lb2, self.lb3, self.lb_bin, self.lb_max, self.mode
        )
    }
}

/// `ceil(sum of times / c)` over original, penalty-free times.
pub fn lb1(times: impl IntoIterator<Item = u32>, c: u32) -> u32 {
    assert!(c >= 1, "cycle time must be positive");
    let sum: u64 = times.into_iter().map(u64::from).sum();
    sum.div_ceil(c as u64) as u32
}

/// Half-capacity weight `w^1`, in sixths.
pub(crate) fn w1_sixths(t: u32, c: u32) -> u64 {
    let (t, c) = (t as u64, c as u64);
    if 2 * t > c {
        6
    } else if 2 * t == c {
        3
    } else {
        0
    }
}

/// Thirds weight `w^2`, in sixths.
pub(crate) fn w2_sixths(t: u32, c: u32) -> u64 {
    let (t, c) = (t as u64, c as u64);
    if 3 * t > 2 * c {
        6
    } else if 3 * t == 2 * c {
        4
    } else if 3 * t > c {
        3
    } else if 3 * t == c {
        2
    } else {
        0
    }
}

pub(crate) fn ceil_sixths(sixths: u64) -> u32 {
    sixths.div_ceil(6) as u32
}

/// Weight contribution of one task under a given mode, in sixths.
fn task_sixths(inst: &Instance, task: u32, c: u32, mode: BoundMode, w: fn(u32, u32) -> u64) -> u64 {
    match inst.division(task) {
        None => w(inst.time(task), c),
        Some(spec) => match mode {
            BoundMode::PaperLiteral => {
                spec.options.iter().map(|o| w(o.sub_time, c)).sum()
            }
            BoundMode::Safe => feasible_activations(inst, task)
                .iter()
                .filter(|qs| {
                    qs.iter().all(|&q| {
                        inst.option_time(task, q) + inst.option_penalty(task, q) <= c
                    })
                })
                .map(|qs| qs.iter().map(|&q| w(inst.option_time(task, q), c)).sum())
                .min()
                .unwrap_or(0),
        },
    }
}

/// The half and thirds weight bounds over a whole instance.
pub fn lb23(inst: &Instance, mode: BoundMode) -> (u32, u32) {
    let c = inst.cycle_time();
    let mut s1 = 0u64;
    let mut s2 = 0u64;
    for task in inst.tasks() {
        s1 += task_sixths(inst, task.id, c, mode, w1_sixths);
        s2 += task_sixths(inst, task.id, c, mode, w2_sixths);
    }
    (ceil_sixths(s1), ceil_sixths(s2))
}

/// Exact bin packing of `items` into bins of size `c`, within a node
/// budget. Exceeding the budget falls back to the stronger of the simple
/// size bound and the waste-counting bound, so the result never exceeds
/// the true bin optimum.
pub fn lb_bin(items: &[u32], c: u32, node_budget: u64) -> Result<u32, BoundsError> {
    assert!(c >= 1, "cycle time must be positive");
    for &it in items {
        if it > c {
            return Err(BoundsError::ItemExceedsBin(it, c));
        }
    }
    let mut sorted: Vec<u32> = items.iter().copied().filter(|&x| x > 0).collect();
    sorted.sort_unstable_by(|a, b| b.cmp(a));
    if sorted.is_empty() {
        return Ok(0);
    }
    let relax = waste_bound(&sorted, c).max(lb1(sorted.iter().copied(), c));
    let mut search = BinSearch {
        items: &sorted,
        c,
        budget: node_budget,
        best: sorted.len() as u32, // one bin per item always works
        exhausted: false,
        suffix_sum: suffix_sums(&sorted),
    };
    let mut bins = Vec::new();
    search.run(0, &mut bins);
    if search.exhausted {
        Ok(relax)
    } else {
        Ok(search.best.max(relax))
    }
}

fn suffix_sums(items: &[u32]) -> Vec<u64> {
    let mut s = vec![0u64; items.len() + 1];
    for i in (0..items.len()).rev() {
        s[i] = s[i + 1] + items[i] as u64;
    }
    s
}

struct BinSearch<'a> {
    items: &'a [u32],
    c: u32,
    budget: u64,
    best: u32,
    exhausted: bool,
    suffix_sum: Vec<u64>,
}

impl BinSearch<'_> {
    fn run(&mut self, next: usize, bins: &mut Vec<u32>) {
        if self.exhausted {
            return;
        }
        if self.budget == 0 {
            self.exhausted = true;
            return;
        }
        self.budget -= 1;
        if next == self.items.len() {
            self.best = self.best.min(bins.len() as u32);
            return;
        }
        // slack bound: work that cannot fit in current residuals needs new bins
        let open_slack: u64 = bins.iter().map(|&r| r as u64).sum();
        let overflow = self.suffix_sum[next].saturating_sub(open_slack);
        let need = bins.len() as u64 + overflow.div_ceil(self.c as u64);
        if need >= self.best as u64 {
            return;
        }
        let item = self.items[next];
        // try each distinct residual once, largest first
        let mut tried = Vec::new();
        for i in 0..bins.len() {
            let r = bins[i];
            if r >= item && !tried.contains(&r) {
                tried.push(r);
                bins[i] = r - item;
                self.run(next + 1, bins);
                bins[i] = r;
            }
        }
        // open a new bin
        bins.push(self.c - item);
        self.run(next + 1, bins);
        bins.pop();
    }
}

/// Waste-counting lower bound: for each threshold, items above `c - a`
/// exclude small items entirely, and the mid-size items must absorb the
/// small ones into their leftover space.
fn waste_bound(sorted_desc: &[u32], c: u32) -> u32 {
    let c64 = c as u64;
    let mut alphas: Vec<u32> = sorted_desc
        .iter()
        .copied()
        .filter(|&x| 2 * x <= c)
        .collect();
    alphas.push(0);
    alphas.dedup();
    let mut best = 0u32;
    for &alpha in &alphas {
        let mut n1 = 0u64; // > c - alpha
        let mut n2 = 0u64; // (c/2, c - alpha]
        let mut sum2 = 0u64;
        let mut sum3 = 0u64; // [alpha, c/2]
        for &x in sorted_desc {
            let x64 = x as u64;
            if x64 > c64 - alpha as u64 {
                n1 += 1;
            } else if 2 * x64 > c64 {
                n2 += 1;
                sum2 += x64;
            } else if x >= alpha {
                sum3 += x64;
            }
        }
        let spare = n2 * c64 - sum2;
        let extra = sum3.saturating_sub(spare).div_ceil(c64);
        best = best.max((n1 + n2 + extra) as u32);
    }
    best
}

/// Bin-packing items for an instance: indivisible tasks keep their time;
/// a divisible task is relaxed to a single item of its smallest usable
/// option time, which underestimates every activation.
pub fn bin_items(inst: &Instance) -> Vec<u32> {
    let c = inst.cycle_time();
    inst.tasks()
        .iter()
        .map(|t| match inst.division(t.id) {
            None => t.time,
            Some(spec) => {
                let mut min = if t.time <= c { t.time } else { u32::MAX };
                for o in &spec.options {
                    if o.final_time() <= c {
                        min = min.min(o.sub_time);
                    }
                }
                min
            }
        })
        .filter(|&t| t > 0)
        .collect()
}

/// Default node budget for the bin-packing search.
pub const DEFAULT_BIN_BUDGET: u64 = 50_000;

/// All bounds for a full instance.
pub fn bound_report(inst: &Instance, mode: BoundMode) -> BoundReport {
    let c = inst.cycle_time();
    let b1 = lb1(inst.tasks().iter().map(|t| t.time), c);
    let (b2, b3) = lb23(inst, mode);
    let bin = lb_bin(&bin_items(inst), c, DEFAULT_BIN_BUDGET).expect("items fit bins");
    BoundReport {
        lb1: b1,
        lb2: b2,
        lb3: b3,
        lb_bin: bin,
        lb_max: b1.max(b2).max(b3).max(bin),
        mode,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{DivisionOption, DivisionSpec};
    use crate::testdata;

    #[test]
    fn lb1_examples() {
        let inst = testdata::worked_instance();
        assert_eq!(lb1(inst.tasks().iter().map(|t| t.time), 10), 10);
        assert_eq!(lb1([], 10), 0);
        assert_eq!(lb1([10], 10), 1);
    }

    #[test]
    fn lb2_on_worked_salbp_view() {
        // eight tasks above c/2 contribute 1, three at c/2 contribute 1/2
        let inst = testdata::worked_instance_salbp();
        let (b2, _) = lb23(&inst, BoundMode::Safe);
        assert_eq!(b2, 10);
    }

    #[test]
    fn lb3_zero_when_everything_small() {
        let inst = crate::instance::Instance::new(
            vec![(1, 2), (2, 2), (3, 2)],
            vec![(1, 2), (2, 3)],
            10,
            vec![],
        )
        .unwrap();
        let (_, b3) = lb23(&inst, BoundMode::Safe);
        assert_eq!(b3, 0);
    }

    #[test]
    fn safe_mode_takes_min_over_activations() {
        // T = <12, 7, 5>, c = 10: undivided infeasible, {7,5} -> 1 + 1/2
        let inst = crate::instance::Instance::new(
            vec![(1, 12), (2, 1)],
            vec![(1, 2)],
            10,
            vec![DivisionSpec {
                task_id: 1,
                options: vec![
                    DivisionOption { sub_time: 7, penalty: 1 },
                    DivisionOption { sub_time: 5, penalty: 1 },
                ],
            }],
        )
        .unwrap();
        let (b2, _) = lb23(&inst, BoundMode::Safe);
        // task 1 contributes 1.5, task 2 contributes 0 -> ceil(1.5) = 2
        assert_eq!(b2, 2);
    }

    #[test]
    fn paper_literal_can_exceed_safe() {
        // one task t=10 with options 6,6,4 at c=10: literal counts both 6s
        let inst = crate::instance::Instance::new(
            vec![(1, 10), (2, 1)],
            vec![(1, 2)],
            10,
            vec![DivisionSpec {
                task_id: 1,
                options: vec![
                    DivisionOption { sub_time: 6, penalty: 1 },
                    DivisionOption { sub_time: 6, penalty: 1 },
                    DivisionOption { sub_time: 4, penalty: 1 },
                ],
            }],
        )
        .unwrap();
        let (lit, _) = lb23(&inst, BoundMode::PaperLiteral);
        let (safe, _) = lb23(&inst, BoundMode::Safe);
        assert_eq!(lit, 2); // overshoots: the true optimum is 1 station
        assert_eq!(safe, 1);
    }

    #[test]
    fn bin_packing_examples() {
        assert_eq!(lb_bin(&[6, 6, 6], 10, 1000).unwrap(), 3);
        assert_eq!(lb_bin(&[5, 5, 5, 5], 10, 1000).unwrap(), 2);
        assert_eq!(lb_bin(&[], 10, 1000).unwrap(), 0);
        assert_eq!(lb_bin(&[11], 10, 1000), Err(BoundsError::ItemExceedsBin(11, 10)));
    }

    #[test]
    fn bin_packing_on_worked_items() {
        let inst = testdata::worked_instance_salbp();
        let items = bin_items(&inst);
        let bins = lb_bin(&items, 10, DEFAULT_BIN_BUDGET).unwrap();
        assert!((10..=12).contains(&bins), "bins = {bins}");
    }

    #[test]
    fn budget_exhaustion_falls_back_to_relaxation() {
        let items: Vec<u32> = (0..40).map(|i| 3 + (i % 5)).collect();
        let exact = lb_bin(&items, 10, u64::MAX).unwrap();
        let fallback = lb_bin(&items, 10, 1).unwrap();
        assert!(fallback <= exact);
        assert!(fallback >= lb1(items.iter().copied(), 10));
    }

    #[test]
    fn report_on_worked_instance() {
        let report = bound_report(&testdata::worked_instance_salbp(), BoundMode::Safe);
        assert_eq!(report.lb1, 10);
        assert_eq!(report.lb2, 10);
        assert!(report.lb_max >= 10);
        assert!(report.lb_max <= 12);
    }
}
