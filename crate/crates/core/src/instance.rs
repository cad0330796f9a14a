//! Problem data model: tasks, precedence arcs, cycle time and division
//! specifications, plus the graph utilities the rest of the crate builds on.
//!
//! An [`Instance`] is immutable after construction. Construction normalizes
//! the input: task ids are renumbered topologically into a contiguous
//! `1..=n` range (ties broken by original id), and a zero-time indivisible
//! dummy terminal is appended when the graph does not already end in a
//! unique indivisible sink.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

/// 1-based task index, topological after normalization.
pub type TaskId = u32;

/// One task of the precedence graph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Task {
    pub id: TaskId,
    /// Processing time in time units. Zero only for the appended dummy terminal.
    pub time: u32,
    pub divisible: bool,
}

/// One subtask option `(t_j^q, f_j^q)` of a divisible task, `q >= 2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DivisionOption {
    pub sub_time: u32,
    pub penalty: u32,
}

impl DivisionOption {
    pub fn final_time(&self) -> u32 {
        self.sub_time + self.penalty
    }
}

/// Division alternatives for one task: the ordered options `q = 2..=r_j`.
///
/// The implicit option `q = 1` is the undivided task itself at zero penalty.
/// Options are kept in nonincreasing `sub_time` order; `q` is the position
/// in that order plus two.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DivisionSpec {
    pub task_id: TaskId,
    pub options: Vec<DivisionOption>,
}

impl DivisionSpec {
    /// Number of processing-time options including the undivided one.
    pub fn r(&self) -> u8 {
        self.options.len() as u8 + 1
    }

    /// Option for index `q` (2-based into `options`).
    pub fn option(&self, q: u8) -> Option<&DivisionOption> {
        if q < 2 {
            return None;
        }
        self.options.get(q as usize - 2)
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum InstanceError {
    #[error("task {0}: processing time must be >= 1")]
    NonPositiveTime(TaskId),
    #[error("duplicate task id {0}")]
    DuplicateTask(TaskId),
    #[error("arc ({0},{1}) references unknown task")]
    UnknownArcEndpoint(TaskId, TaskId),
    #[error("duplicate arc ({0},{1})")]
    DuplicateArc(TaskId, TaskId),
    #[error("self arc ({0},{0})")]
    SelfArc(TaskId),
    #[error("precedence graph contains a cycle")]
    CycleDetected,
    #[error("cycle time must be >= 1")]
    NonPositiveCycleTime,
    #[error("division spec references unknown task {0}")]
    UnknownDivisionTask(TaskId),
    #[error("duplicate division spec for task {0}")]
    DuplicateDivision(TaskId),
    #[error("division spec for task {0} has no options")]
    EmptyDivision(TaskId),
    #[error("task {task}: sub time {sub_time} outside 1..={max} (t_j - 2)")]
    SubTimeOutOfRange { task: TaskId, sub_time: u32, max: u32 },
    #[error("task {task}: penalty must be >= 1 for q >= 2")]
    NonPositivePenalty { task: TaskId },
    #[error("indivisible task {task} has time {time} exceeding cycle time {cycle}")]
    TimeExceedsCycle { task: TaskId, time: u32, cycle: u32 },
    #[error("divisible task {task} admits no activation with all parts within cycle time {cycle}")]
    NoFeasibleActivation { task: TaskId, cycle: u32 },
}

/// A validated SALBP-1 / TDALBP instance.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Instance {
    tasks: Vec<Task>,
    arcs: Vec<(TaskId, TaskId)>,
    cycle_time: u32,
    divisions: BTreeMap<TaskId, DivisionSpec>,
    /// Id the appended dummy terminal got, if one was appended.
    dummy_terminal: Option<TaskId>,
    /// Original external id per normalized id (1-based slot `id-1`).
    original_ids: Vec<u32>,
}

impl Instance {
    /// Build a normalized instance from raw parts.
    ///
    /// `tasks` are (id, time) pairs with arbitrary ids; `divisions` refer to
    /// those ids. Renumbering to topological 1..=n happens here.
    pub fn new(
        tasks: Vec<(u32, u32)>,
        arcs: Vec<(u32, u32)>,
        cycle_time: u32,
        divisions: Vec<DivisionSpec>,
    ) -> Result<Self, InstanceError> {
        if cycle_time < 1 {
            return Err(InstanceError::NonPositiveCycleTime);
        }
        let mut seen = BTreeSet::new();
        for &(id, time) in &tasks {
            if !seen.insert(id) {
                return Err(InstanceError::DuplicateTask(id));
            }
            if time < 1 {
                return Err(InstanceError::NonPositiveTime(id));
            }
        }
        let mut arc_set = BTreeSet::new();
        for &(i, j) in &arcs {
            if i == j {
                return Err(InstanceError::SelfArc(i));
            }
            if !seen.contains(&i) || !seen.contains(&j) {
                return Err(InstanceError::UnknownArcEndpoint(i, j));
            }
            if !arc_set.insert((i, j)) {
                return Err(InstanceError::DuplicateArc(i, j));
            }
        }
        let mut div_map: BTreeMap<u32, DivisionSpec> = BTreeMap::new();
        for spec in divisions {
            if !seen.contains(&spec.task_id) {
                return Err(InstanceError::UnknownDivisionTask(spec.task_id));
            }
            if spec.options.is_empty() {
                return Err(InstanceError::EmptyDivision(spec.task_id));
            }
            if div_map.contains_key(&spec.task_id) {
                return Err(InstanceError::DuplicateDivision(spec.task_id));
            }
            div_map.insert(spec.task_id, spec);
        }

        // Topological order over original ids, ties by ascending id.
        let order = topo_order(&tasks, &arc_set)?;
        let mut new_id: BTreeMap<u32, TaskId> = BTreeMap::new();
        for (pos, &orig) in order.iter().enumerate() {
            new_id.insert(orig, pos as TaskId + 1);
        }
        let time_of: BTreeMap<u32, u32> = tasks.iter().copied().collect();

        let mut norm_tasks: Vec<Task> = order
            .iter()
            .map(|&orig| Task {
                id: new_id[&orig],
                time: time_of[&orig],
                divisible: div_map.contains_key(&orig),
            })
            .collect();
        let mut norm_arcs: Vec<(TaskId, TaskId)> = arc_set
            .iter()
            .map(|&(i, j)| (new_id[&i], new_id[&j]))
            .collect();
        norm_arcs.sort_unstable();
        let mut norm_divs: BTreeMap<TaskId, DivisionSpec> = BTreeMap::new();
        for (orig, mut spec) in div_map {
            // Canonical option order: nonincreasing sub_time, stable.
            spec.options.sort_by(|a, b| b.sub_time.cmp(&a.sub_time));
            spec.task_id = new_id[&orig];
            norm_divs.insert(spec.task_id, spec);
        }
        let mut original_ids: Vec<u32> = order.clone();

        // A unique indivisible sink must exist; otherwise append a dummy.
        let n = norm_tasks.len() as TaskId;
        let mut has_succ = vec![false; n as usize + 1];
        for &(i, _) in &norm_arcs {
            has_succ[i as usize] = true;
        }
        let sinks: Vec<TaskId> = (1..=n).filter(|&t| !has_succ[t as usize]).collect();
        let needs_dummy = sinks.len() != 1 || norm_divs.contains_key(&sinks[0]);
        let mut dummy_terminal = None;
        if needs_dummy {
            let dummy = n + 1;
            for &s in &sinks {
                norm_arcs.push((s, dummy));
            }
            norm_tasks.push(Task {
                id: dummy,
                time: 0,
                divisible: false,
            });
            original_ids.push(0); // no external counterpart
            dummy_terminal = Some(dummy);
        }

        let inst = Instance {
            tasks: norm_tasks,
            arcs: norm_arcs,
            cycle_time,
            divisions: norm_divs,
            dummy_terminal,
            original_ids,
        };
        inst.check_divisions()?;
        inst.check_cycle_feasibility()?;
        Ok(inst)
    }

    fn check_divisions(&self) -> Result<(), InstanceError> {
        for (&tid, spec) in &self.divisions {
            let t = self.time(tid);
            if t < 3 {
                // no sub time can satisfy 1 <= s <= t - 2
                return Err(InstanceError::SubTimeOutOfRange {
                    task: tid,
                    sub_time: spec.options[0].sub_time,
                    max: t.saturating_sub(2),
                });
            }
            for opt in &spec.options {
                if opt.sub_time < 1 || opt.sub_time > t - 2 {
                    return Err(InstanceError::SubTimeOutOfRange {
                        task: tid,
                        sub_time: opt.sub_time,
                        max: t - 2,
                    });
                }
                if opt.penalty < 1 {
                    return Err(InstanceError::NonPositivePenalty { task: tid });
                }
            }
        }
        Ok(())
    }

    fn check_cycle_feasibility(&self) -> Result<(), InstanceError> {
        let c = self.cycle_time;
        for task in &self.tasks {
            match self.divisions.get(&task.id) {
                None => {
                    if task.time > c {
                        return Err(InstanceError::TimeExceedsCycle {
                            task: task.id,
                            time: task.time,
                            cycle: c,
                        });
                    }
                }
                Some(spec) => {
                    if !self.has_feasible_activation(task.id, spec) {
                        return Err(InstanceError::NoFeasibleActivation {
                            task: task.id,
                            cycle: c,
                        });
                    }
                }
            }
        }
        Ok(())
    }

    /// Some activation places every part within the cycle time.
    fn has_feasible_activation(&self, tid: TaskId, spec: &DivisionSpec) -> bool {
        let c = self.cycle_time;
        if self.time(tid) <= c {
            return true; // undivided works
        }
        // Subset sum over options whose final time fits.
        let t = self.time(tid);
        let usable: Vec<u32> = spec
            .options
            .iter()
            .filter(|o| o.final_time() <= c)
            .map(|o| o.sub_time)
            .collect();
        subset_sum_exists(&usable, t)
    }

    pub fn n(&self) -> usize {
        self.tasks.len()
    }

    pub fn tasks(&self) -> &[Task] {
        &self.tasks
    }

    pub fn task(&self, id: TaskId) -> &Task {
        &self.tasks[id as usize - 1]
    }

    pub fn time(&self, id: TaskId) -> u32 {
        self.task(id).time
    }

    pub fn arcs(&self) -> &[(TaskId, TaskId)] {
        &self.arcs
    }

    pub fn cycle_time(&self) -> u32 {
        self.cycle_time
    }

    pub fn divisions(&self) -> impl Iterator<Item = &DivisionSpec> {
        self.divisions.values()
    }

    pub fn division(&self, id: TaskId) -> Option<&DivisionSpec> {
        self.divisions.get(&id)
    }

    /// Ids of divisible tasks (the set `D`).
    pub fn divisible_ids(&self) -> Vec<TaskId> {
        self.divisions.keys().copied().collect()
    }

    /// Number of options `r_j` (1 for indivisible tasks).
    pub fn r(&self, id: TaskId) -> u8 {
        self.divisions.get(&id).map_or(1, |s| s.r())
    }

    /// Given processing time of option `q` of task `id` (`q = 1` is the task).
    pub fn option_time(&self, id: TaskId, q: u8) -> u32 {
        if q == 1 {
            self.time(id)
        } else {
            self.divisions[&id].option(q).expect("option index").sub_time
        }
    }

    /// Penalty of option `q` (zero for `q = 1`).
    pub fn option_penalty(&self, id: TaskId, q: u8) -> u32 {
        if q == 1 {
            0
        } else {
            self.divisions[&id].option(q).expect("option index").penalty
        }
    }

    pub fn dummy_terminal(&self) -> Option<TaskId> {
        self.dummy_terminal
    }

    /// The unique terminal task (after normalization).
    pub fn terminal(&self) -> TaskId {
        self.tasks.len() as TaskId
    }

    /// External id a normalized task had in the input (0 for the dummy).
    pub fn original_id(&self, id: TaskId) -> u32 {
        self.original_ids[id as usize - 1]
    }

    /// Total given work (penalty-free), invariant under any activation.
    pub fn total_time(&self) -> u64 {
        self.tasks.iter().map(|t| t.time as u64).sum()
    }

    /// Direct predecessors per task, indexed by `id - 1`.
    pub fn direct_preds(&self) -> Vec<Vec<TaskId>> {
        let mut preds = vec![Vec::new(); self.n()];
        for &(i, j) in &self.arcs {
            preds[j as usize - 1].push(i);
        }
        preds
    }

    /// Direct successors per task, indexed by `id - 1`.
    pub fn direct_succs(&self) -> Vec<Vec<TaskId>> {
        let mut succs = vec![Vec::new(); self.n()];
        for &(i, j) in &self.arcs {
            succs[i as usize - 1].push(j);
        }
        succs
    }

    /// The same instance with every division stripped (the SALBP-1 view).
    pub fn without_divisions(&self) -> Instance {
        let mut inst = self.clone();
        inst.divisions.clear();
        for t in &mut inst.tasks {
            t.divisible = false;
        }
        inst
    }

    /// The same instance with a different cycle time, revalidated.
    pub fn with_cycle_time(&self, cycle_time: u32) -> Result<Instance, InstanceError> {
        if cycle_time < 1 {
            return Err(InstanceError::NonPositiveCycleTime);
        }
        let mut inst = self.clone();
        inst.cycle_time = cycle_time;
        inst.check_cycle_feasibility()?;
        Ok(inst)
    }
}

/// Transitive predecessor/successor sets `P*_j`, `F*_j` for every task.
#[derive(Debug, Clone)]
pub struct TransitiveSets {
    pub preds: Vec<BTreeSet<TaskId>>,
    pub succs: Vec<BTreeSet<TaskId>>,
}

impl TransitiveSets {
    pub fn preds_of(&self, id: TaskId) -> &BTreeSet<TaskId> {
        &self.preds[id as usize - 1]
    }

    pub fn succs_of(&self, id: TaskId) -> &BTreeSet<TaskId> {
        &self.succs[id as usize - 1]
    }
}

/// Reachability closure over the precedence graph.
///
/// Ids are topological, so a single ascending sweep accumulates `P*` and a
/// descending sweep accumulates `F*`.
pub fn transitive_sets(inst: &Instance) -> TransitiveSets {
    let n = inst.n();
    let mut preds: Vec<BTreeSet<TaskId>> = vec![BTreeSet::new(); n];
    let mut succs: Vec<BTreeSet<TaskId>> = vec![BTreeSet::new(); n];
    for &(i, j) in inst.arcs() {
        let (ii, jj) = (i as usize - 1, j as usize - 1);
        let mut from = preds[ii].clone();
        from.insert(i);
        preds[jj].extend(from);
    }
    // arcs are sorted ascending; reverse sweep for successors
    for &(i, j) in inst.arcs().iter().rev() {
        let (ii, jj) = (i as usize - 1, j as usize - 1);
        let mut from = succs[jj].clone();
        from.insert(j);
        succs[ii].extend(from);
    }
    TransitiveSets { preds, succs }
}

fn topo_order(
    tasks: &[(u32, u32)],
    arcs: &BTreeSet<(u32, u32)>,
) -> Result<Vec<u32>, InstanceError> {
    let ids: BTreeSet<u32> = tasks.iter().map(|&(id, _)| id).collect();
    let mut indeg: BTreeMap<u32, usize> = ids.iter().map(|&id| (id, 0)).collect();
    let mut succs: BTreeMap<u32, Vec<u32>> = BTreeMap::new();
    for &(i, j) in arcs {
        *indeg.get_mut(&j).unwrap() += 1;
        succs.entry(i).or_default().push(j);
    }
    // BTreeSet front-pop keeps ties by ascending original id.
    let mut ready: BTreeSet<u32> = indeg
        .iter()
        .filter(|(_, &d)| d == 0)
        .map(|(&id, _)| id)
        .collect();
    let mut order = Vec::with_capacity(ids.len());
    while let Some(&next) = ready.iter().next() {
        ready.remove(&next);
        order.push(next);
        if let Some(children) = succs.get(&next) {
            for &ch in children {
                let d = indeg.get_mut(&ch).unwrap();
                *d -= 1;
                if *d == 0 {
                    ready.insert(ch);
                }
            }
        }
    }
    if order.len() != ids.len() {
        return Err(InstanceError::CycleDetected);
    }
    Ok(order)
}

fn subset_sum_exists(values: &[u32], target: u32) -> bool {
    let mut reachable = vec![false; target as usize + 1];
    reachable[0] = true;
    for &v in values {
        if v as usize > target as usize {
            continue;
        }
        for s in (v as usize..=target as usize).rev() {
            if reachable[s - v as usize] {
                reachable[s] = true;
            }
        }
    }
    reachable[target as usize]
}
