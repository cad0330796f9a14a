//! Station assignments, their validation and the line metrics.

use std::collections::BTreeMap;
use std::fmt;

use crate::instance::{Instance, TaskId};

/// One station load: activated nodes as `(task_id, option_index)` pairs.
pub type Load = Vec<(TaskId, u8)>;

/// A full station assignment with its evaluated measures.
#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub stations: Vec<Load>,
    /// Total time penalty `F` over all activated subtasks.
    pub penalty_total: u32,
    /// Line efficiency in percent, penalty-inclusive station times.
    pub le: f64,
    /// Line time: flow time of one unit through the line.
    pub lt: u64,
}

impl Solution {
    /// Validate `stations` against `inst` and evaluate the measures.
    pub fn evaluate(inst: &Instance, stations: Vec<Load>) -> Result<Solution, ValidationReport> {
        let report = validate_solution(inst, &stations);
        if !report.is_valid() {
            return Err(report);
        }
        Ok(Self::evaluate_unchecked(inst, stations))
    }

    /// Evaluate measures without validating. Callers guarantee validity.
    pub fn evaluate_unchecked(inst: &Instance, stations: Vec<Load>) -> Solution {
        let penalty_total = stations
            .iter()
            .flatten()
            .map(|&(t, q)| inst.option_penalty(t, q))
            .sum();
        let (le, lt) = metrics(inst, &stations);
        Solution { stations, penalty_total, le, lt }
    }

    pub fn m(&self) -> usize {
        self.stations.len()
    }
}

/// Penalty-inclusive time of one station load.
pub fn load_time(inst: &Instance, load: &[(TaskId, u8)]) -> u64 {
    load.iter()
        .map(|&(t, q)| (inst.option_time(t, q) + inst.option_penalty(t, q)) as u64)
        .sum()
}

/// Line efficiency (percent) and line time of a station assignment.
///
/// `LE = 100 * sum_k t(S_k) / (m * c)` with penalty-inclusive station
/// times; `LT = c * (m - 1) + t(S_m)`.
pub fn metrics(inst: &Instance, stations: &[Load]) -> (f64, u64) {
    let c = inst.cycle_time() as u64;
    let m = stations.len() as u64;
    if m == 0 {
        return (0.0, 0);
    }
    let total: u64 = stations.iter().map(|s| load_time(inst, s)).sum();
    let last = load_time(inst, stations.last().unwrap());
    let le = 100.0 * total as f64 / (m * c) as f64;
    let lt = c * (m - 1) + last;
    (le, lt)
}

/// A violated validation clause.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    EmptyStation { station: usize },
    CycleTimeExceeded { station: usize, load_time: u64, cycle: u32 },
    UnknownTask { station: usize, task: TaskId },
    BadOptionIndex { station: usize, task: TaskId, q: u8, r: u8 },
    MissingTask { task: TaskId },
    RepeatedTask { task: TaskId, count: usize },
    RepeatedOption { task: TaskId, q: u8, count: usize },
    UndividedAndSubtasks { task: TaskId },
    DivisionSumMismatch { task: TaskId, sum: u32, expected: u32 },
    SharedStationParts { task: TaskId, station: usize },
    PrecedenceViolated { pred: TaskId, succ: TaskId, pred_station: usize, succ_station: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use Violation::*;
        match self {
            EmptyStation { station } => write!(f, "station {station} is empty"),
            CycleTimeExceeded { station, load_time, cycle } => {
                write!(f, "station {station} load {load_time} exceeds cycle time {cycle}")
            }
            UnknownTask { station, task } => {
                write!(f, "station {station} references unknown task {task}")
            }
            BadOptionIndex { station, task, q, r } => {
                write!(f, "station {station}: task {task} has no option {q} (r = {r})")
            }
            MissingTask { task } => write!(f, "task {task} is not activated"),
            RepeatedTask { task, count } => {
                write!(f, "task {task} appears undivided {count} times")
            }
            RepeatedOption { task, q, count } => {
                write!(f, "subtask {task}^{q} activated {count} times")
            }
            UndividedAndSubtasks { task } => {
                write!(f, "task {task} is both undivided and divided")
            }
            DivisionSumMismatch { task, sum, expected } => {
                write!(f, "task {task}: activated subtasks sum to {sum}, expected {expected}")
            }
            SharedStationParts { task, station } => {
                write!(f, "task {task} has two subtasks on station {station}")
            }
            PrecedenceViolated { pred, succ, pred_station, succ_station } => write!(
                f,
                "arc ({pred},{succ}) violated: {pred} at station {pred_station} after {succ} at {succ_station}"
            ),
        }
    }
}

/// The outcome of checking every clause; never stops at the first failure.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_valid() {
            write!(f, "valid")
        } else {
            for (i, v) in self.violations.iter().enumerate() {
                if i > 0 {
                    writeln!(f)?;
                }
                write!(f, "{v}")?;
            }
            Ok(())
        }
    }
}

/// Check a station assignment clause by clause.
///
/// Verified: per-station cycle time with final times, activation
/// consistency (undivided exactly once or a distinct-station subset of
/// options whose given times sum to the task time), and precedence — every
/// activated occurrence of a predecessor must sit at a station index less
/// than or equal to every occurrence of the successor.
pub fn validate_solution(inst: &Instance, stations: &[Load]) -> ValidationReport {
    let mut violations = Vec::new();
    let n = inst.n() as TaskId;
    let c = inst.cycle_time();

    // occurrences per task: (station 1-based, q)
    let mut occ: BTreeMap<TaskId, Vec<(usize, u8)>> = BTreeMap::new();
    for (s, load) in stations.iter().enumerate() {
        let station = s + 1;
        if load.is_empty() {
            violations.push(Violation::EmptyStation { station });
            continue;
        }
        let mut time = 0u64;
        for &(task, q) in load {
            if task < 1 || task > n {
                violations.push(Violation::UnknownTask { station, task });
                continue;
            }
            let r = inst.r(task);
            if q < 1 || q > r {
                violations.push(Violation::BadOptionIndex { station, task, q, r });
                continue;
            }
            time += (inst.option_time(task, q) + inst.option_penalty(task, q)) as u64;
            occ.entry(task).or_default().push((station, q));
        }
        if time > c as u64 {
            violations.push(Violation::CycleTimeExceeded { station, load_time: time, cycle: c });
        }
    }

    for task in inst.tasks() {
        let occs = occ.get(&task.id).map(Vec::as_slice).unwrap_or(&[]);
        let undivided = occs.iter().filter(|&&(_, q)| q == 1).count();
        let subs: Vec<(usize, u8)> = occs.iter().copied().filter(|&(_, q)| q != 1).collect();
        if occs.is_empty() {
            violations.push(Violation::MissingTask { task: task.id });
            continue;
        }
        if undivided > 1 {
            violations.push(Violation::RepeatedTask { task: task.id, count: undivided });
        }
        if undivided > 0 && !subs.is_empty() {
            violations.push(Violation::UndividedAndSubtasks { task: task.id });
        }
        if undivided == 0 && !subs.is_empty() {
            let mut per_q: BTreeMap<u8, usize> = BTreeMap::new();
            for &(_, q) in &subs {
                *per_q.entry(q).or_default() += 1;
            }
            for (&q, &count) in &per_q {
                if count > 1 {
                    violations.push(Violation::RepeatedOption { task: task.id, q, count });
                }
            }
            let sum: u32 = per_q.keys().map(|&q| inst.option_time(task.id, q)).sum();
            if sum != task.time {
                violations.push(Violation::DivisionSumMismatch {
                    task: task.id,
                    sum,
                    expected: task.time,
                });
            }
            let mut by_station: BTreeMap<usize, usize> = BTreeMap::new();
            for &(s, _) in &subs {
                *by_station.entry(s).or_default() += 1;
            }
            for (&s, &count) in &by_station {
                if count > 1 {
                    violations.push(Violation::SharedStationParts { task: task.id, station: s });
                }
            }
        }
    }

    for &(i, j) in inst.arcs() {
        let (Some(oi), Some(oj)) = (occ.get(&i), occ.get(&j)) else {
            continue; // missing tasks reported above
        };
        let pred_last = oi.iter().map(|&(s, _)| s).max().unwrap();
        let succ_first = oj.iter().map(|&(s, _)| s).min().unwrap();
        if pred_last > succ_first {
            violations.push(Violation::PrecedenceViolated {
                pred: i,
                succ: j,
                pred_station: pred_last,
                succ_station: succ_first,
            });
        }
    }

    ValidationReport { violations }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::io::parse_solution_text;
    use crate::testdata;

    fn sol(text: &str) -> Vec<Load> {
        parse_solution_text(text).unwrap()
    }

    /// Optimal 11-station division layout with total penalty 4.
    const WORKED_F4: &str = "\
2 4
1 3^2
3^3 5
6 9^2
8 12
7 9^3 13
10 16
14 17
11 19 20
15 18
21 22 23
";

    #[test]
    fn worked_f4_layout_is_valid() {
        let inst = testdata::worked_instance();
        let stations = sol(WORKED_F4);
        let report = validate_solution(&inst, &stations);
        assert!(report.is_valid(), "{report}");
        let solution = Solution::evaluate(&inst, stations).unwrap();
        assert_eq!(solution.penalty_total, 4);
        assert_eq!(solution.m(), 11);
    }

    #[test]
    fn cycle_time_violation_detected() {
        // station load 11 with c = 10
        let inst = testdata::worked_instance();
        let mut stations = sol(WORKED_F4);
        stations[4].push((17, 1)); // 8 + 2 + 1 = 11
        stations[7].retain(|&(t, _)| t != 17);
        let report = validate_solution(&inst, &stations);
        assert!(report
            .violations
            .iter()
            .any(|v| matches!(v, Violation::CycleTimeExceeded { station: 5, load_time: 11, .. })));
    }

    #[test]
    fn division_sum_mismatch_detected() {
        // 3^2 activated but 3^3 omitted: 4 != 7
        let inst = testdata::worked_instance();
        let mut stations = sol(WORKED_F4);
        for load in &mut stations {
            load.retain(|&(t, q)| !(t == 3 && q == 3));
        }
        let report = validate_solution(&inst, &stations);
        assert!(report
            .violations
            .iter()
            .any(|v| matches!(v, Violation::DivisionSumMismatch { task: 3, sum: 4, expected: 7 })));
    }

    #[test]
    fn precedence_and_distinct_station_clauses() {
        let inst = testdata::worked_instance();
        // move subtask 9^3 ahead of its predecessor's station
        let mut stations = sol(WORKED_F4);
        stations[0].push((9, 3));
        stations[5].retain(|&(t, q)| !(t == 9 && q == 3));
        let report = validate_solution(&inst, &stations);
        assert!(report
            .violations
            .iter()
            .any(|v| matches!(v, Violation::PrecedenceViolated { pred: 6, succ: 9, .. })));

        // two parts of task 3 on one station
        let mut stations = sol(WORKED_F4);
        stations[1].push((3, 3));
        stations[2].retain(|&(t, q)| !(t == 3 && q == 3));
        let report = validate_solution(&inst, &stations);
        assert!(report
            .violations
            .iter()
            .any(|v| matches!(v, Violation::SharedStationParts { task: 3, station: 2 })));
    }

    #[test]
    fn undivided_plus_subtask_detected() {
        let inst = testdata::worked_instance();
        let mut stations = sol(WORKED_F4);
        stations[0].push((3, 1));
        let report = validate_solution(&inst, &stations);
        assert!(report
            .violations
            .iter()
            .any(|v| matches!(v, Violation::UndividedAndSubtasks { task: 3 })));
    }

    #[test]
    fn salbp_layout_metrics() {
        // 12-station undivided layout: LE = 100 * 100 / 120, LT = 110 + 6
        let inst = testdata::worked_instance_salbp();
        let stations = sol("1\n2 4\n3\n5 6 7\n8 12\n9\n10 11\n13 15 16\n18 22\n14 21\n17 19 20\n23\n");
        let solution = Solution::evaluate(&inst, stations).unwrap();
        assert_eq!(solution.penalty_total, 0);
        assert_eq!(solution.m(), 12);
        assert!((solution.le - 83.33333333).abs() < 1e-6);
        assert_eq!(solution.lt, 116);
    }

    #[test]
    fn single_full_station_is_fully_efficient() {
        let inst =
            crate::instance::Instance::new(vec![(1, 10)], vec![], 10, vec![]).unwrap();
        let solution = Solution::evaluate(&inst, vec![vec![(1, 1)]]).unwrap();
        assert_eq!(solution.le, 100.0);
        assert_eq!(solution.lt, 10);
    }
}
