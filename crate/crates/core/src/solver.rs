//! Exact search for the minimum station count: an initial heuristic
//! incumbent, a cyclic best-first search with dominance rules and
//! station-boundary memoization, and a breadth-first finishing step when
//! the best-first step hits one of its limits.

use std::collections::{BTreeMap, HashMap, VecDeque};
use std::sync::Arc;
use std::time::{Duration, Instant};

use thiserror::Error;

use crate::bounds::{self, BoundMode};
use crate::expand::{ExpandedGraph, NodeId, OptionMask};
use crate::hoffmann::{mhh, HeuristicConfig, HeuristicError};
use crate::instance::Instance;
use crate::search::{for_each_load, Assignment, LoadLimits, LoadPolicy, SearchGraph};
use crate::solution::{load_time, validate_solution, Solution};

/// Individual pruning rules, so each can be disabled for verification.
#[derive(Debug, Clone, Copy)]
pub struct RuleToggles {
    /// emit only maximal station loads
    pub maximal_loads: bool,
    /// replacement dominance on assigned undivided nodes
    pub jackson: bool,
    /// prune successor-free last loads while successor work remains
    pub last_station: bool,
    /// station-boundary memoization on the assigned node set
    pub memoize: bool,
}

impl Default for RuleToggles {
    fn default() -> Self {
        RuleToggles { maximal_loads: true, jackson: true, last_station: true, memoize: true }
    }
}

#[derive(Debug, Clone)]
pub struct SolverConfig {
    /// balancing factor in the selection priority
    pub lambda: f64,
    /// cap on loads generated per expanded state
    pub max_loads: usize,
    /// cap on each level's priority-queue size
    pub max_queue: usize,
    pub time_limit: Option<Duration>,
    pub bound_mode: BoundMode,
    /// search for the minimum total penalty among minimum-station solutions
    pub min_penalty_postpass: bool,
    /// memoization entries before degrading to no-memo mode
    pub memo_capacity: usize,
    pub rules: RuleToggles,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            lambda: 0.002,
            max_loads: 10_000,
            max_queue: 300_000,
            time_limit: None,
            bound_mode: BoundMode::Safe,
            min_penalty_postpass: false,
            memo_capacity: 4_000_000,
            rules: RuleToggles::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Phase {
    I,
    II,
    III,
}

impl std::fmt::Display for Phase {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Phase::I => write!(f, "I"),
            Phase::II => write!(f, "II"),
            Phase::III => write!(f, "III"),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct LimitsHit {
    pub load_truncated: bool,
    pub queue_overflow: bool,
    pub memo_full: bool,
    pub time_limit: bool,
    pub memory: bool,
}

impl LimitsHit {
    /// Limits that forfeit an optimality claim.
    pub fn any(&self) -> bool {
        self.load_truncated || self.queue_overflow || self.time_limit || self.memory
    }
}

#[derive(Debug, Clone)]
pub struct SolveResult {
    pub best: Solution,
    pub optimal: bool,
    pub nodes_explored: u64,
    pub phase_reached: Phase,
    pub limits_hit: LimitsHit,
    /// strongest root lower bound used for the optimality certificate
    pub lower_bound: u32,
    /// minimum total penalty over minimum-station solutions, when the
    /// post-pass ran to completion
    pub min_penalty: Option<u32>,
    pub elapsed: Duration,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SolveError {
    #[error(transparent)]
    Heuristic(#[from] HeuristicError),
}

/// Selection priority of a partial solution: average idle time per used
/// station, minus `lambda` per unassigned node. Lower is expanded first.
pub fn priority(idle: u64, m: u32, unassigned: usize, lambda: f64) -> f64 {
    idle as f64 / m as f64 - lambda * unassigned as f64
}

/// Idle-time optimality certificate for a complete solution.
///
/// `T_oc` is the total idle time ignoring penalties. When it is smaller
/// than the lightest station load, no rearrangement (even free division)
/// can empty a station, so the station count is optimal.
pub fn optimality_test(inst: &Instance, sol: &Solution) -> bool {
    let c = inst.cycle_time() as u64;
    let mut t_oc: u64 = 0;
    let mut lightest = u64::MAX;
    for load in &sol.stations {
        let final_time = load_time(inst, load);
        let penalty: u64 = load.iter().map(|&(t, q)| inst.option_penalty(t, q) as u64).sum();
        t_oc += c - (final_time - penalty);
        lightest = lightest.min(final_time);
    }
    t_oc < lightest
}

/// Solve an instance to optimality (or to the configured limits).
pub fn solve(inst: &Instance, cfg: &SolverConfig) -> Result<SolveResult, SolveError> {
    let start = Instant::now();
    let mut g = ExpandedGraph::expand(inst);

    // Step I: heuristic incumbent.
    let heuristic = mhh(
        &g,
        &HeuristicConfig { max_loads_per_station: cfg.max_loads, ..Default::default() },
    )?;
    let m_ub = heuristic.m() as u32;
    g.rebound(m_ub);

    let report = bounds::bound_report(inst, cfg.bound_mode);
    let root_lb = report.lb_max;

    let mut best = heuristic;
    let mut optimal = m_ub <= root_lb || optimality_test(inst, &best);
    let mut phase = Phase::I;
    let mut limits = LimitsHit::default();
    let mut nodes = 0u64;

    if !optimal {
        phase = Phase::II;
        let sg = SearchGraph::new(&g);
        let mut search = Search::new(&sg, inst, cfg, root_lb, start);
        search.best_m = m_ub;
        let outcome = search.run_cbfs();
        if let Some(sol) = search.take_best(inst) {
            best = sol;
        }
        nodes += search.nodes;
        limits = search.limits;
        optimal = match outcome {
            Outcome::Closed => true,
            Outcome::Exhausted => !limits.load_truncated && !limits.queue_overflow,
            Outcome::TimedOut => false,
        };

        // Step III: breadth-first finishing pass, run only when the
        // best-first step could not prove optimality. A fresh memo store
        // is used: entries from a truncated run may refer to states whose
        // subtrees were evicted, so reusing them could prune live work.
        if !optimal && !limits.time_limit {
            phase = Phase::III;
            let mut finish = Search::new(&sg, inst, cfg, root_lb, start);
            finish.best_m = best.m() as u32;
            finish.bfs_mode = true;
            let outcome = finish.run_bfs();
            if let Some(sol) = finish.take_best(inst) {
                if sol.m() < best.m() {
                    best = sol;
                }
            }
            nodes += finish.nodes;
            limits.time_limit |= finish.limits.time_limit;
            limits.memory |= finish.limits.memory;
            limits.memo_full |= finish.limits.memo_full;
            optimal = match outcome {
                Outcome::Closed => true,
                Outcome::Exhausted => {
                    !finish.limits.load_truncated && !finish.limits.memory
                }
                Outcome::TimedOut => false,
            };
        }
    }

    let mut min_penalty = None;
    if cfg.min_penalty_postpass {
        if let Some((sol, exact)) = penalty_postpass(inst, &mut g, cfg, best.m() as u32, start) {
            if exact {
                min_penalty = Some(sol.penalty_total);
            }
            if sol.penalty_total < best.penalty_total {
                best = sol;
            }
        }
    }

    debug_assert!(validate_solution(inst, &best.stations).is_valid());
    Ok(SolveResult {
        best,
        optimal,
        nodes_explored: nodes,
        phase_reached: phase,
        limits_hit: limits,
        lower_bound: root_lb,
        min_penalty,
        elapsed: start.elapsed(),
    })
}

/// Convenience: solve the SALBP-1 view (divisions stripped).
pub fn solve_salbp(inst: &Instance, cfg: &SolverConfig) -> Result<SolveResult, SolveError> {
    solve(&inst.without_divisions(), cfg)
}

// ---------------------------------------------------------------------------
// search internals

#[derive(Clone, Copy, PartialEq)]
struct OrdF64(f64);

impl Eq for OrdF64 {}
impl PartialOrd for OrdF64 {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for OrdF64 {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0.total_cmp(&other.0)
    }
}

struct Chain {
    load: Vec<NodeId>,
    prev: Option<Arc<Chain>>,
}

#[derive(Clone)]
struct State {
    bits: Box<[u64]>,
    assign: Assignment,
    m: u32,
    idle: u64,
    chain: Option<Arc<Chain>>,
}

enum Outcome {
    /// closed by bound, certificate or first-solution mode
    Closed,
    Exhausted,
    TimedOut,
}

struct Search<'a> {
    sg: &'a SearchGraph,
    inst: &'a Instance,
    cfg: &'a SolverConfig,
    root_lb: u32,
    start: Instant,
    /// per-level priority queues, keyed by (priority, insertion sequence)
    levels: Vec<BTreeMap<(OrdF64, u64), State>>,
    seq: u64,
    memo: HashMap<Box<[u64]>, u32>,
    best_m: u32,
    best_chain: Option<Arc<Chain>>,
    limits: LimitsHit,
    nodes: u64,
    /// stop at the first solution strictly better than the initial best_m
    first_solution_only: bool,
    /// breadth-first mode: no queue caps, frontier drained externally
    bfs_mode: bool,
}

impl<'a> Search<'a> {
    fn new(
        sg: &'a SearchGraph,
        inst: &'a Instance,
        cfg: &'a SolverConfig,
        root_lb: u32,
        start: Instant,
    ) -> Search<'a> {
        Search {
            sg,
            inst,
            cfg,
            root_lb,
            start,
            levels: vec![BTreeMap::new()],
            seq: 0,
            memo: HashMap::new(),
            best_m: u32::MAX,
            best_chain: None,
            limits: LimitsHit::default(),
            nodes: 0,
            first_solution_only: false,
            bfs_mode: false,
        }
    }

    fn root_state(&self) -> State {
        State {
            bits: vec![0u64; self.sg.words.max(1)].into_boxed_slice(),
            assign: Assignment::empty(self.sg.n_tasks),
            m: 0,
            idle: 0,
            chain: None,
        }
    }

    fn timed_out(&mut self) -> bool {
        if let Some(limit) = self.cfg.time_limit {
            if self.start.elapsed() >= limit {
                self.limits.time_limit = true;
                return true;
            }
        }
        false
    }

    /// Admissible bound on the stations still needed from `assign`.
    fn lb_remaining(&self, assign: &Assignment) -> u32 {
        let sg = self.sg;
        let c = sg.cycle;
        let rem = assign.remaining_given(sg);
        let lb1 = rem.div_ceil(c as u64) as u32;
        let mut s1 = 0u64;
        let mut s2 = 0u64;
        for t in 0..sg.n_tasks {
            if assign.complete(sg, t) {
                continue;
            }
            match self.cfg.bound_mode {
                BoundMode::Safe => {
                    s1 += self.remaining_sixths(assign, t, bounds::w1_sixths);
                    s2 += self.remaining_sixths(assign, t, bounds::w2_sixths);
                }
                BoundMode::PaperLiteral => {
                    if sg.task_indivisible[t] {
                        s1 += bounds::w1_sixths(sg.task_time[t], c);
                        s2 += bounds::w2_sixths(sg.task_time[t], c);
                    } else {
                        for (qi, &gt) in sg.opt_given[t].iter().enumerate().skip(1) {
                            if assign.mask[t] & (1 << qi) == 0 && gt > 0 {
                                s1 += bounds::w1_sixths(gt, c);
                                s2 += bounds::w2_sixths(gt, c);
                            }
                        }
                    }
                }
            }
        }
        let lb = lb1.max(bounds::ceil_sixths(s1)).max(bounds::ceil_sixths(s2));
        if rem > 0 {
            lb.max(1)
        } else {
            lb
        }
    }

    /// Minimum weight sum over activations compatible with the assigned
    /// options of one task, in sixths.
    fn remaining_sixths(&self, assign: &Assignment, t: usize, w: fn(u32, u32) -> u64) -> u64 {
        let sg = self.sg;
        let m = assign.mask[t];
        sg.task_acts[t]
            .iter()
            .filter(|&&a| a & m == m)
            .map(|&a| {
                let rest = a & !m;
                (0..16u8)
                    .filter(|&qi| rest & (1 << qi) != 0)
                    .map(|qi| w(sg.opt_given[t][qi as usize], sg.cycle))
                    .sum()
            })
            .min()
            .unwrap_or(0)
    }

    /// Replacement dominance: an assigned undivided node of the load could
    /// be swapped for an unstarted indivisible task that is at least as
    /// long, covers at least its successors, and was available when the
    /// station opened.
    fn jackson_dominated(
        &self,
        load: &[NodeId],
        load_final: u32,
        emit_assign: &Assignment,
        available_at_start: &[bool],
    ) -> bool {
        let sg = self.sg;
        for &v in load {
            if sg.node_q[v] != 1 {
                continue;
            }
            let j = sg.node_parent[v];
            let tj = sg.node_given[v];
            for i in 0..sg.n_tasks {
                if i == j
                    || !sg.task_indivisible[i]
                    || emit_assign.mask[i] != 0
                    || sg.task_time[i] < tj
                    || !available_at_start[i]
                    || sg.related(i, j)
                    || !sg.fstar_superset(i, j)
                {
                    continue;
                }
                if sg.task_time[i] == tj && sg.fstar_equal(i, j) && i >= j {
                    continue;
                }
                if load_final - tj + sg.task_time[i] <= sg.cycle {
                    return true;
                }
            }
        }
        false
    }

    /// Expand one state into its children; push survivors. Returns true
    /// when the search can stop (closed by a bound or certificate).
    fn expand(&mut self, st: &State) -> bool {
        self.nodes += 1;
        if self.timed_out() {
            return true;
        }
        let sg = self.sg;
        let available_at_start: Vec<bool> =
            (0..sg.n_tasks).map(|t| st.assign.preds_complete(sg, t)).collect();
        let limits = LoadLimits {
            max_loads: self.cfg.max_loads,
            maximal_only: self.cfg.rules.maximal_loads,
        };

        let mut emitted: Vec<(Vec<NodeId>, u32)> = Vec::new();
        let mut assign = st.assign.clone();
        let truncated = {
            let this = &*self;
            let jackson = this.cfg.rules.jackson;
            for_each_load(sg, &mut assign, LoadPolicy::All, &limits, |l| {
                if jackson
                    && this.jackson_dominated(
                        l.nodes,
                        l.final_time,
                        l.assign,
                        &available_at_start,
                    )
                {
                    return;
                }
                emitted.push((l.nodes.to_vec(), l.final_time));
            })
        };
        if truncated {
            self.limits.load_truncated = true;
        }

        for (load, load_final) in emitted {
            if self.build_child(st, load, load_final) {
                return true;
            }
        }
        false
    }

    fn build_child(&mut self, parent: &State, load: Vec<NodeId>, load_final: u32) -> bool {
        let sg = self.sg;
        let mut child_assign = parent.assign.clone();
        let mut bits = parent.bits.clone();
        for &v in &load {
            child_assign.place(sg, v);
            bits[v / 64] |= 1 << (v % 64);
        }
        let m = parent.m + 1;
        let idle = parent.idle + (sg.cycle - load_final) as u64;
        let all_succ_free = load.iter().all(|&v| sg.succ_free[sg.node_parent[v]]);
        let chain = Some(Arc::new(Chain { load, prev: parent.chain.clone() }));

        if child_assign.all_complete(sg) {
            if m < self.best_m {
                self.best_m = m;
                self.best_chain = chain;
                if self.best_m <= self.root_lb || self.first_solution_only {
                    return true;
                }
                // idle-time certificate on the new incumbent
                if let Some(sol) = self.chain_solution(self.inst, self.best_chain.clone()) {
                    if optimality_test(self.inst, &sol) {
                        return true;
                    }
                }
            }
            return false;
        }

        // last-station exchange rule: a closed all-successor-free load can
        // swap with the first later successor-carrying station
        if self.cfg.rules.last_station && all_succ_free {
            let work_with_succs =
                (0..sg.n_tasks).any(|t| !sg.succ_free[t] && !child_assign.complete(sg, t));
            if work_with_succs {
                return false;
            }
        }

        if m + self.lb_remaining(&child_assign) >= self.best_m {
            return false;
        }

        if self.cfg.rules.memoize {
            match self.memo.get_mut(&bits) {
                Some(seen) if *seen <= m => return false,
                Some(seen) => *seen = m,
                None => {
                    if self.memo.len() < self.cfg.memo_capacity {
                        self.memo.insert(bits.clone(), m);
                    } else {
                        self.limits.memo_full = true;
                    }
                }
            }
        }

        let u = child_assign.unassigned_count(sg);
        let b = priority(idle, m, u, self.cfg.lambda);
        let child = State { bits, assign: child_assign, m, idle, chain };
        self.push(child, b);
        false
    }

    fn push(&mut self, st: State, b: f64) {
        let level = st.m as usize;
        while self.levels.len() <= level {
            self.levels.push(BTreeMap::new());
        }
        let q = &mut self.levels[level];
        let key = (OrdF64(b), self.seq);
        self.seq += 1;
        if !self.bfs_mode && q.len() >= self.cfg.max_queue {
            self.limits.queue_overflow = true;
            // keep the newcomer only if it beats the worst queued state
            let worst = *q.last_key_value().expect("nonempty queue").0;
            if key < worst {
                q.pop_last();
                q.insert(key, st);
            }
            return;
        }
        q.insert(key, st);
    }

    fn run_cbfs(&mut self) -> Outcome {
        let root = self.root_state();
        if self.expand(&root) {
            return self.finish_outcome();
        }
        loop {
            let mut popped = false;
            for level in 1..self.levels.len() {
                let Some((_, st)) = self.levels[level].pop_first() else {
                    continue;
                };
                popped = true;
                if st.m + self.lb_remaining(&st.assign) >= self.best_m {
                    continue;
                }
                if self.expand(&st) {
                    return self.finish_outcome();
                }
            }
            if !popped {
                return Outcome::Exhausted;
            }
        }
    }

    fn run_bfs(&mut self) -> Outcome {
        let mut frontier = VecDeque::new();
        let root = self.root_state();
        if self.expand_into(&root, &mut frontier) {
            return self.finish_outcome();
        }
        while let Some(st) = frontier.pop_front() {
            if frontier.len() > self.cfg.max_queue {
                self.limits.memory = true;
                return Outcome::Exhausted;
            }
            if st.m + self.lb_remaining(&st.assign) >= self.best_m {
                continue;
            }
            if self.expand_into(&st, &mut frontier) {
                return self.finish_outcome();
            }
        }
        Outcome::Exhausted
    }

    /// Like `expand`, but children are drained into a FIFO frontier.
    fn expand_into(&mut self, st: &State, frontier: &mut VecDeque<State>) -> bool {
        let stop = self.expand(st);
        for level in 1..self.levels.len() {
            while let Some((_, child)) = self.levels[level].pop_first() {
                frontier.push_back(child);
            }
        }
        stop
    }

    fn finish_outcome(&mut self) -> Outcome {
        if self.limits.time_limit {
            Outcome::TimedOut
        } else {
            Outcome::Closed
        }
    }

    fn chain_solution(&self, inst: &Instance, chain: Option<Arc<Chain>>) -> Option<Solution> {
        let sg = self.sg;
        let mut loads = Vec::new();
        let mut cur = chain;
        while let Some(c) = cur {
            loads.push(
                c.load
                    .iter()
                    .map(|&v| (sg.node_parent[v] as u32 + 1, sg.node_q[v]))
                    .collect::<Vec<_>>(),
            );
            cur = c.prev.clone();
        }
        if loads.is_empty() {
            return None;
        }
        loads.reverse();
        Some(Solution::evaluate_unchecked(inst, loads))
    }

    fn take_best(&mut self, inst: &Instance) -> Option<Solution> {
        self.chain_solution(inst, self.best_chain.clone())
    }
}

/// Enumerate activation combinations in ascending total-penalty order and
/// return the first one feasible within `m_target` stations, together with
/// an exactness flag (false when some rejection was inconclusive).
fn penalty_postpass(
    inst: &Instance,
    g: &mut ExpandedGraph,
    cfg: &SolverConfig,
    m_target: u32,
    start: Instant,
) -> Option<(Solution, bool)> {
    const COMBO_CAP: usize = 100_000;
    g.rebound(m_target);
    let sg_base = SearchGraph::new(g);

    let divisible: Vec<usize> =
        (0..sg_base.n_tasks).filter(|&t| sg_base.task_acts[t].len() > 1).collect();
    let mut count: usize = 1;
    for &t in &divisible {
        count = count.saturating_mul(sg_base.task_acts[t].len());
        if count > COMBO_CAP {
            return None;
        }
    }

    let mut combos: Vec<(u32, Vec<OptionMask>)> = Vec::new();
    let base_masks: Vec<OptionMask> = sg_base.task_acts.iter().map(|a| a[0]).collect();
    let mut stack: Vec<(usize, u32, Vec<OptionMask>)> = vec![(0, 0, base_masks)];
    while let Some((i, pen, masks)) = stack.pop() {
        if i == divisible.len() {
            combos.push((pen, masks));
            continue;
        }
        let t = divisible[i];
        for &a in sg_base.task_acts[t].iter().rev() {
            let extra = mask_penalty(inst, t, a);
            let mut next = masks.clone();
            next[t] = a;
            stack.push((i + 1, pen + extra, next));
        }
    }
    combos.sort();

    let mut exact = true;
    for (pen, masks) in combos {
        let sg = SearchGraph::new(g).with_fixed_activations(&masks);
        let mut search = Search::new(&sg, inst, cfg, 0, start);
        search.best_m = m_target + 1;
        search.first_solution_only = true;
        let outcome = search.run_cbfs();
        if search.limits.load_truncated || search.limits.queue_overflow {
            exact = false;
        }
        if matches!(outcome, Outcome::TimedOut) {
            return None;
        }
        if let Some(sol) = search.take_best(inst) {
            if sol.m() as u32 <= m_target {
                debug_assert_eq!(sol.penalty_total, pen);
                return Some((sol, exact));
            }
        }
    }
    None
}

fn mask_penalty(inst: &Instance, task_idx: usize, mask: OptionMask) -> u32 {
    let id = task_idx as u32 + 1;
    (2..=inst.r(id))
        .filter(|&q| mask & (1 << (q - 1)) != 0)
        .map(|q| inst.option_penalty(id, q))
        .sum()
}
