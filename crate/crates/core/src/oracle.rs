//! Exhaustive ground-truth solver for small instances.
//!
//! The enumeration is deliberately self-contained: it derives the node
//! universe straight from the [`Instance`] and applies only cycle-time,
//! precedence and division-sum feasibility, so it cannot inherit a bug
//! from the search modules it is used to check.

use std::collections::BTreeSet;

use thiserror::Error;

use crate::instance::{Instance, TaskId};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum OracleError {
    #[error("instance expands to {0} nodes, above the oracle cap of {1}")]
    TooLarge(usize, usize),
    #[error("instance has no feasible solution")]
    Infeasible,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OracleResult {
    pub m_opt: u32,
    pub min_penalty_among_optima: u32,
    /// Optimal solutions counted up to station reordering of equal loads.
    pub count_optima: u64,
}

pub const DEFAULT_CAP: usize = 18;

#[derive(Clone, Copy)]
struct Node {
    parent: TaskId,
    q: u8,
    given: u32,
    final_time: u32,
    penalty: u32,
}

struct Enumeration<'a> {
    inst: &'a Instance,
    nodes: Vec<Node>,
    /// direct predecessor tasks per task
    preds: Vec<Vec<TaskId>>,
    /// per task: assigned option mask (bit q-1)
    assigned_mask: Vec<u16>,
    assigned_sum: Vec<u32>,
    /// stations built so far; last one is open
    stations: Vec<Vec<usize>>,
    residual: u32,
    penalty: u32,
    cutoff: u32,
    strict: bool,
    best: u32,
    optima: BTreeSet<Vec<Vec<(TaskId, u8)>>>,
    min_penalty: u32,
}

impl<'a> Enumeration<'a> {
    fn new(inst: &'a Instance, cutoff: u32, strict: bool) -> Self {
        let c = inst.cycle_time();
        let mut nodes = Vec::new();
        for t in inst.tasks() {
            if t.time <= c {
                nodes.push(Node {
                    parent: t.id,
                    q: 1,
                    given: t.time,
                    final_time: t.time,
                    penalty: 0,
                });
            }
            if let Some(spec) = inst.division(t.id) {
                for (i, o) in spec.options.iter().enumerate() {
                    if o.final_time() <= c {
                        nodes.push(Node {
                            parent: t.id,
                            q: i as u8 + 2,
                            given: o.sub_time,
                            final_time: o.final_time(),
                            penalty: o.penalty,
                        });
                    }
                }
            }
        }
        Enumeration {
            inst,
            nodes,
            preds: inst.direct_preds(),
            assigned_mask: vec![0; inst.n()],
            assigned_sum: vec![0; inst.n()],
            stations: vec![Vec::new()],
            residual: c,
            penalty: 0,
            cutoff,
            strict,
            best: u32::MAX,
            optima: BTreeSet::new(),
            min_penalty: u32::MAX,
        }
    }

    fn task_complete(&self, t: TaskId) -> bool {
        let idx = t as usize - 1;
        if self.inst.time(t) == 0 {
            // zero-time dummy terminal still needs its node placed
            return self.assigned_mask[idx] & 1 != 0;
        }
        self.assigned_mask[idx] != 0 && self.assigned_sum[idx] == self.inst.time(t)
    }

    fn all_complete(&self) -> bool {
        (1..=self.inst.n() as TaskId).all(|t| self.task_complete(t))
    }

    fn node_allowed(&self, id: usize) -> bool {
        let node = &self.nodes[id];
        let idx = node.parent as usize - 1;
        let mask = self.assigned_mask[idx];
        let bit = 1u16 << (node.q - 1);
        if mask & bit != 0 {
            return false; // option already used
        }
        if node.q == 1 {
            if mask != 0 {
                return false; // already divided
            }
        } else {
            if mask & 1 != 0 {
                return false; // already undivided
            }
            if self.assigned_sum[idx] + node.given > self.inst.time(node.parent) {
                return false; // would overshoot the division sum
            }
            // distinct stations for parts of one task
            if self.stations.last().unwrap().iter().any(|&o| self.nodes[o].parent == node.parent)
            {
                return false;
            }
        }
        // every predecessor complete within closed stations or the open one
        self.preds[idx].iter().all(|&p| self.task_complete(p))
    }

    fn record(&mut self) {
        let m = self.stations.len() as u32;
        if self.strict {
            if m < self.best {
                self.best = m;
            }
            return;
        }
        // canonical multiset of loads
        let mut loads: Vec<Vec<(TaskId, u8)>> = self
            .stations
            .iter()
            .map(|s| s.iter().map(|&o| (self.nodes[o].parent, self.nodes[o].q)).collect())
            .collect();
        loads.sort();
        if self.optima.insert(loads) {
            self.min_penalty = self.min_penalty.min(self.penalty);
        }
    }

    fn dfs(&mut self) {
        if self.all_complete() {
            self.record();
            return;
        }
        let bound = if self.strict { self.best.min(self.cutoff + 1) } else { self.cutoff + 1 };
        // moves: add one node (ascending ids within the open station)
        let last = self.stations.last().unwrap().last().copied();
        let start = last.map_or(0, |l| l + 1);
        for id in start..self.nodes.len() {
            if self.nodes[id].final_time <= self.residual && self.node_allowed(id) {
                let node = self.nodes[id];
                let idx = node.parent as usize - 1;
                self.stations.last_mut().unwrap().push(id);
                self.assigned_mask[idx] |= 1 << (node.q - 1);
                self.assigned_sum[idx] += node.given;
                self.residual -= node.final_time;
                self.penalty += node.penalty;
                self.dfs();
                self.penalty -= node.penalty;
                self.residual += node.final_time;
                self.assigned_sum[idx] -= node.given;
                self.assigned_mask[idx] &= !(1 << (node.q - 1));
                self.stations.last_mut().unwrap().pop();
            }
        }
        // move: close the open station and start the next
        if !self.stations.last().unwrap().is_empty() && (self.stations.len() as u32) + 1 < bound {
            let c = self.inst.cycle_time();
            let saved = self.residual;
            self.stations.push(Vec::new());
            self.residual = c;
            self.dfs();
            self.residual = saved;
            self.stations.pop();
        }
    }
}

/// Exhaustive search for the optimal station count, the minimum total
/// penalty among optimal solutions, and the number of optima.
pub fn brute_force(inst: &Instance, cap_nodes: usize) -> Result<OracleResult, OracleError> {
    let count = node_count(inst);
    if count > cap_nodes {
        return Err(OracleError::TooLarge(count, cap_nodes));
    }

    // pass 1: minimum m
    let mut pass1 = Enumeration::new(inst, u32::MAX - 1, true);
    pass1.dfs();
    if pass1.best == u32::MAX {
        return Err(OracleError::Infeasible);
    }
    let m_opt = pass1.best;

    // pass 2: enumerate all optima at exactly m_opt stations
    let mut pass2 = Enumeration::new(inst, m_opt, false);
    pass2.dfs();
    // keep only solutions that used exactly m_opt stations; fewer is
    // impossible by pass 1, and the cutoff forbids more
    let count_optima = pass2.optima.iter().filter(|s| s.len() == m_opt as usize).count() as u64;
    let min_penalty = pass2
        .optima
        .iter()
        .filter(|s| s.len() == m_opt as usize)
        .map(|s| {
            s.iter()
                .flatten()
                .map(|&(t, q)| inst.option_penalty(t, q))
                .sum::<u32>()
        })
        .min()
        .unwrap_or(0);

    Ok(OracleResult { m_opt, min_penalty_among_optima: min_penalty, count_optima })
}

/// Size of the oracle's node universe for an instance.
pub fn node_count(inst: &Instance) -> usize {
    let c = inst.cycle_time();
    inst.tasks()
        .iter()
        .map(|t| {
            let undivided = (t.time <= c) as usize;
            let subs = inst
                .division(t.id)
                .map_or(0, |s| s.options.iter().filter(|o| o.final_time() <= c).count());
            undivided + subs
        })
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{DivisionOption, DivisionSpec, Instance};

    #[test]
    fn three_full_tasks_need_three_stations() {
        let inst = Instance::new(vec![(1, 10), (2, 10), (3, 10)], vec![], 10, vec![]).unwrap();
        let res = brute_force(&inst, DEFAULT_CAP).unwrap();
        assert_eq!(res.m_opt, 3);
        assert_eq!(res.min_penalty_among_optima, 0);
    }

    #[test]
    fn chain_packs_perfectly() {
        let inst = Instance::new(
            vec![(1, 4), (2, 6), (3, 5), (4, 5)],
            vec![(1, 2), (2, 3), (3, 4)],
            10,
            vec![],
        )
        .unwrap();
        let res = brute_force(&inst, DEFAULT_CAP).unwrap();
        assert_eq!(res.m_opt, 2);
    }

    #[test]
    fn division_saves_a_station() {
        // t = {6, 10, 4} at c = 10: undivided needs 2 stations; dividing
        // task 1 into 3+3 still needs 2 because of penalties, but dividing
        // with zero-size effect is impossible, so check the counts instead
        let inst = Instance::new(
            vec![(1, 6), (2, 4)],
            vec![],
            10,
            vec![DivisionSpec {
                task_id: 1,
                options: vec![
                    DivisionOption { sub_time: 3, penalty: 1 },
                    DivisionOption { sub_time: 3, penalty: 1 },
                ],
            }],
        )
        .unwrap();
        let res = brute_force(&inst, DEFAULT_CAP).unwrap();
        // {1, 2} fits one station undivided (6 + 4 = 10); dummy rides along
        assert_eq!(res.m_opt, 1);
        assert_eq!(res.min_penalty_among_optima, 0);
    }

    #[test]
    fn count_optima_modulo_station_order() {
        // two independent full-station tasks: the two orderings are one solution
        let inst = Instance::new(vec![(1, 10), (2, 10)], vec![], 10, vec![]).unwrap();
        let res = brute_force(&inst, DEFAULT_CAP).unwrap();
        assert_eq!(res.m_opt, 2);
        // loads {1,dummy},{2} and {1},{2,dummy} are genuinely different
        assert_eq!(res.count_optima, 2);
    }

    #[test]
    fn cap_is_enforced() {
        let tasks: Vec<(u32, u32)> = (1..=20).map(|i| (i, 1)).collect();
        let inst = Instance::new(tasks, vec![], 10, vec![]).unwrap();
        assert!(matches!(
            brute_force(&inst, DEFAULT_CAP),
            Err(OracleError::TooLarge(21, DEFAULT_CAP))
        ));
    }

    #[test]
    fn forced_division_by_large_task() {
        // t = 12 > c = 10 must divide into 7 + 5 with unit penalties
        let inst = Instance::new(
            vec![(1, 12), (2, 2)],
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
        let res = brute_force(&inst, DEFAULT_CAP).unwrap();
        // parts 8 and 6 on distinct stations; task 2 and dummy fit alongside
        assert_eq!(res.m_opt, 2);
        assert_eq!(res.min_penalty_among_optima, 2);
    }
}
