//! Shared state bookkeeping and station-load enumeration used by the
//! constructive heuristic and the exact search.

use crate::expand::{ExpandedGraph, NodeId, OptionMask};

/// Immutable, index-friendly view of an expanded graph for search loops.
pub(crate) struct SearchGraph {
    pub n_tasks: usize,
    pub n_nodes: usize,
    /// bitset words needed for a node set
    pub words: usize,
    pub node_parent: Vec<usize>,
    pub node_q: Vec<u8>,
    pub node_final: Vec<u32>,
    pub node_given: Vec<u32>,
    pub node_penalty: Vec<u32>,
    pub task_time: Vec<u32>,
    /// given time per option, indexed `[task][q - 1]`; zero for pruned options
    pub opt_given: Vec<Vec<u32>>,
    /// surviving activation masks per task (fixed for one search)
    pub task_acts: Vec<Vec<OptionMask>>,
    pub task_nodes: Vec<Vec<NodeId>>,
    pub task_preds: Vec<Vec<usize>>,
    pub task_indivisible: Vec<bool>,
    /// transitive successor closure per task, as a task bitset
    pub fstar: Vec<Box<[u64]>>,
    pub succ_free: Vec<bool>,
    pub total_given: u64,
    pub cycle: u32,
}

impl SearchGraph {
    pub fn new(g: &ExpandedGraph) -> SearchGraph {
        let inst = g.instance();
        let n_tasks = inst.n();
        let n_nodes = g.node_count();
        let words = n_nodes.div_ceil(64);
        let mut node_parent = Vec::with_capacity(n_nodes);
        let mut node_q = Vec::with_capacity(n_nodes);
        let mut node_final = Vec::with_capacity(n_nodes);
        let mut node_given = Vec::with_capacity(n_nodes);
        let mut node_penalty = Vec::with_capacity(n_nodes);
        for node in g.nodes() {
            node_parent.push(node.parent as usize - 1);
            node_q.push(node.q);
            node_final.push(node.final_time());
            node_given.push(node.given_time);
            node_penalty.push(node.penalty);
        }
        let task_time: Vec<u32> = inst.tasks().iter().map(|t| t.time).collect();
        let opt_given: Vec<Vec<u32>> = inst
            .tasks()
            .iter()
            .map(|t| (1..=inst.r(t.id)).map(|q| inst.option_time(t.id, q)).collect())
            .collect();
        let task_acts: Vec<Vec<OptionMask>> = inst
            .tasks()
            .iter()
            .map(|t| g.activations_of(t.id).to_vec())
            .collect();
        let task_nodes: Vec<Vec<NodeId>> =
            inst.tasks().iter().map(|t| g.task_nodes(t.id)).collect();
        let task_preds: Vec<Vec<usize>> = inst
            .direct_preds()
            .into_iter()
            .map(|ps| ps.into_iter().map(|p| p as usize - 1).collect())
            .collect();
        let task_indivisible: Vec<bool> =
            inst.tasks().iter().map(|t| !t.divisible).collect();
        let ts = g.transitive();
        let twords = n_tasks.div_ceil(64);
        let mut fstar = Vec::with_capacity(n_tasks);
        let mut succ_free = Vec::with_capacity(n_tasks);
        for t in 0..n_tasks {
            let mut bits = vec![0u64; twords].into_boxed_slice();
            for &s in &ts.succs[t] {
                let i = s as usize - 1;
                bits[i / 64] |= 1 << (i % 64);
            }
            succ_free.push(ts.succs[t].is_empty());
            fstar.push(bits);
        }
        SearchGraph {
            n_tasks,
            n_nodes,
            words,
            node_parent,
            node_q,
            node_final,
            node_given,
            node_penalty,
            task_time,
            opt_given,
            task_acts,
            task_nodes,
            task_preds,
            task_indivisible,
            fstar,
            succ_free,
            total_given: inst.total_time(),
            cycle: inst.cycle_time(),
        }
    }

    /// Force one activation per task (used by the penalty post-pass).
    pub fn with_fixed_activations(mut self, chosen: &[OptionMask]) -> SearchGraph {
        for (t, &mask) in chosen.iter().enumerate() {
            self.task_acts[t] = vec![mask];
        }
        self
    }

    pub fn fstar_superset(&self, i: usize, j: usize) -> bool {
        self.fstar[i]
            .iter()
            .zip(self.fstar[j].iter())
            .all(|(&a, &b)| a & b == b)
    }

    pub fn fstar_equal(&self, i: usize, j: usize) -> bool {
        self.fstar[i] == self.fstar[j]
    }

    /// Any precedence relation between two tasks, either direction.
    pub fn related(&self, i: usize, j: usize) -> bool {
        let bit = |set: &[u64], idx: usize| set[idx / 64] & (1 << (idx % 64)) != 0;
        bit(&self.fstar[i], j) || bit(&self.fstar[j], i)
    }
}

/// Per-task assignment bookkeeping: which options are placed and how much
/// given time they cover.
#[derive(Clone, Debug, PartialEq, Eq)]
pub(crate) struct Assignment {
    pub mask: Vec<OptionMask>,
    pub sum: Vec<u32>,
}

impl Assignment {
    pub fn empty(n_tasks: usize) -> Assignment {
        Assignment { mask: vec![0; n_tasks], sum: vec![0; n_tasks] }
    }

    pub fn place(&mut self, sg: &SearchGraph, v: NodeId) {
        let t = sg.node_parent[v];
        self.mask[t] |= 1 << (sg.node_q[v] - 1);
        self.sum[t] += sg.node_given[v];
    }

    pub fn unplace(&mut self, sg: &SearchGraph, v: NodeId) {
        let t = sg.node_parent[v];
        self.mask[t] &= !(1 << (sg.node_q[v] - 1));
        self.sum[t] -= sg.node_given[v];
    }

    /// All activated parts of the task are placed.
    pub fn complete(&self, sg: &SearchGraph, t: usize) -> bool {
        self.mask[t] != 0 && self.sum[t] == sg.task_time[t]
    }

    pub fn all_complete(&self, sg: &SearchGraph) -> bool {
        (0..sg.n_tasks).all(|t| self.complete(sg, t))
    }

    pub fn preds_complete(&self, sg: &SearchGraph, t: usize) -> bool {
        sg.task_preds[t].iter().all(|&p| self.complete(sg, p))
    }

    /// The assigned option set extends to some surviving activation.
    pub fn extendable(&self, sg: &SearchGraph, t: usize, with: OptionMask) -> bool {
        let m = self.mask[t] | with;
        sg.task_acts[t].iter().any(|&a| a & m == m)
    }

    /// Options of `t` still assignable under division consistency.
    pub fn candidate_options(&self, sg: &SearchGraph, t: usize) -> OptionMask {
        if self.complete(sg, t) {
            return 0;
        }
        let m = self.mask[t];
        sg.task_acts[t]
            .iter()
            .filter(|&&a| a & m == m)
            .fold(0, |acc, &a| acc | (a & !m))
    }

    /// Count of assignable remaining nodes (the set `U`).
    pub fn unassigned_count(&self, sg: &SearchGraph) -> usize {
        (0..sg.n_tasks)
            .map(|t| self.candidate_options(sg, t).count_ones() as usize)
            .sum()
    }

    /// Remaining given time over all tasks.
    pub fn remaining_given(&self, sg: &SearchGraph) -> u64 {
        sg.total_given - self.sum.iter().map(|&s| s as u64).sum::<u64>()
    }

    /// Division consistency and precedence for `v`, ignoring capacity.
    /// `in_load` carries the open station for the distinct-station rule.
    pub fn eligible(&self, sg: &SearchGraph, v: NodeId, in_load: &[NodeId]) -> bool {
        let t = sg.node_parent[v];
        let q = sg.node_q[v];
        let bit = 1u16 << (q - 1);
        if self.mask[t] & bit != 0 {
            return false;
        }
        if q == 1 {
            if self.mask[t] != 0 {
                return false;
            }
        } else {
            if self.mask[t] & 1 != 0 {
                return false;
            }
            if !self.extendable(sg, t, bit) {
                return false;
            }
            if in_load.iter().any(|&o| sg.node_parent[o] == t) {
                return false;
            }
        }
        self.preds_complete(sg, t)
    }
}

/// Which nodes a load may draw from.
#[derive(Clone, Copy, PartialEq, Eq)]
pub(crate) enum LoadPolicy {
    /// Exact search: everything eligible.
    All,
    /// Heuristic without division.
    UndividedOnly,
    /// Heuristic: subtasks only when no undivided node fits.
    SubtasksWhenBlocked,
}

pub(crate) struct LoadLimits {
    pub max_loads: usize,
    /// emit only loads no eligible node can extend
    pub maximal_only: bool,
}

/// One emitted load. `final_time`/`given_time`/`penalty` are the sums over
/// the member nodes; `assign` is the assignment with the load placed.
pub(crate) struct EmittedLoad<'a> {
    pub nodes: &'a [NodeId],
    pub final_time: u32,
    pub given_time: u32,
    pub penalty: u32,
    pub assign: &'a Assignment,
}

/// Enumerate feasible station loads from the current assignment, ascending
/// node-id order (each feasible set is generated exactly once). Returns
/// true when the `max_loads` budget truncated the enumeration.
pub(crate) fn for_each_load<F: FnMut(&EmittedLoad)>(
    sg: &SearchGraph,
    assign: &mut Assignment,
    policy: LoadPolicy,
    limits: &LoadLimits,
    mut emit: F,
) -> bool {
    let mut e = Enumerator {
        sg,
        assign,
        policy,
        maximal_only: limits.maximal_only,
        budget: limits.max_loads,
        truncated: false,
        load: Vec::new(),
        final_time: 0,
        given_time: 0,
        penalty: 0,
        emit: &mut emit,
    };
    e.dfs(0);
    e.truncated
}

struct Enumerator<'a, F: FnMut(&EmittedLoad)> {
    sg: &'a SearchGraph,
    assign: &'a mut Assignment,
    policy: LoadPolicy,
    maximal_only: bool,
    budget: usize,
    truncated: bool,
    load: Vec<NodeId>,
    final_time: u32,
    given_time: u32,
    penalty: u32,
    emit: &'a mut F,
}

impl<F: FnMut(&EmittedLoad)> Enumerator<'_, F> {
    fn admitted(&self, v: NodeId, residual: u32, undivided_fits: bool) -> bool {
        if self.sg.node_final[v] > residual {
            return false;
        }
        match self.policy {
            LoadPolicy::All => {}
            LoadPolicy::UndividedOnly => {
                if self.sg.node_q[v] != 1 {
                    return false;
                }
            }
            LoadPolicy::SubtasksWhenBlocked => {
                if self.sg.node_q[v] != 1 && undivided_fits {
                    return false;
                }
            }
        }
        self.assign.eligible(self.sg, v, &self.load)
    }

    /// Is some eligible undivided node within the residual capacity?
    fn undivided_fits(&self, residual: u32) -> bool {
        (0..self.sg.n_nodes).any(|v| {
            self.sg.node_q[v] == 1
                && self.sg.node_final[v] <= residual
                && self.assign.eligible(self.sg, v, &self.load)
        })
    }

    fn dfs(&mut self, start: NodeId) {
        if self.truncated {
            return;
        }
        let residual = self.sg.cycle - self.final_time;
        let undivided_fits = matches!(self.policy, LoadPolicy::SubtasksWhenBlocked)
            && self.undivided_fits(residual);

        let mut extensible = false;
        let mut candidates: Vec<NodeId> = Vec::new();
        for v in 0..self.sg.n_nodes {
            if self.admitted(v, residual, undivided_fits) {
                extensible = true;
                if v >= start {
                    candidates.push(v);
                }
            }
        }

        if !self.load.is_empty() && (!self.maximal_only || !extensible) {
            if self.budget == 0 {
                self.truncated = true;
                return;
            }
            self.budget -= 1;
            (self.emit)(&EmittedLoad {
                nodes: &self.load,
                final_time: self.final_time,
                given_time: self.given_time,
                penalty: self.penalty,
                assign: self.assign,
            });
        }

        for v in candidates {
            // admission can shift as the load grows; re-check
            let residual = self.sg.cycle - self.final_time;
            let undivided_fits = matches!(self.policy, LoadPolicy::SubtasksWhenBlocked)
                && self.undivided_fits(residual);
            if !self.admitted(v, residual, undivided_fits) {
                continue;
            }
            self.load.push(v);
            self.final_time += self.sg.node_final[v];
            self.given_time += self.sg.node_given[v];
            self.penalty += self.sg.node_penalty[v];
            self.assign.place(self.sg, v);
            self.dfs(v + 1);
            self.assign.unplace(self.sg, v);
            self.penalty -= self.sg.node_penalty[v];
            self.given_time -= self.sg.node_given[v];
            self.final_time -= self.sg.node_final[v];
            self.load.pop();
            if self.truncated {
                return;
            }
        }
    }
}
