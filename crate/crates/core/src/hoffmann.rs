//! Constructive station-by-station heuristic providing the initial upper
//! bound and incumbent for the exact search.
//!
//! Stations are filled left to right. At each station the feasible maximal
//! loads are enumerated (up to a cap) and the one with minimal idle time is
//! kept, ties broken by fewer nodes, then by lexicographically smallest
//! node-id set.

use thiserror::Error;

use crate::expand::{ExpandedGraph, NodeId};
use crate::search::{for_each_load, Assignment, EmittedLoad, LoadLimits, LoadPolicy, SearchGraph};
use crate::solution::Solution;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DivisionPolicy {
    /// Only undivided nodes; fails when a task cannot fit a station whole.
    Never,
    /// Divide a task only when no undivided eligible node fits the
    /// residual capacity.
    #[default]
    GreedyWhenBlocked,
}

#[derive(Debug, Clone)]
pub struct HeuristicConfig {
    pub max_loads_per_station: usize,
    pub division_policy: DivisionPolicy,
}

impl Default for HeuristicConfig {
    fn default() -> Self {
        HeuristicConfig {
            max_loads_per_station: 10_000,
            division_policy: DivisionPolicy::GreedyWhenBlocked,
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum HeuristicError {
    #[error("no feasible load for station {0}; a task cannot be placed under the current policy")]
    Blocked(usize),
}

/// Run the heuristic on an expanded graph, returning a valid solution.
pub fn mhh(g: &ExpandedGraph, cfg: &HeuristicConfig) -> Result<Solution, HeuristicError> {
    let sg = SearchGraph::new(g);
    let policy = match cfg.division_policy {
        DivisionPolicy::Never => LoadPolicy::UndividedOnly,
        DivisionPolicy::GreedyWhenBlocked => LoadPolicy::SubtasksWhenBlocked,
    };
    let limits = LoadLimits { max_loads: cfg.max_loads_per_station, maximal_only: true };
    let mut assign = Assignment::empty(sg.n_tasks);
    let mut stations: Vec<Vec<NodeId>> = Vec::new();

    while !assign.all_complete(&sg) {
        let mut best: Option<(u32, usize, Vec<NodeId>)> = None;
        for_each_load(&sg, &mut assign, policy, &limits, |l: &EmittedLoad| {
            let key = (l.final_time, l.nodes.len(), l.nodes);
            let better = match &best {
                None => true,
                // max time, then fewer nodes, then smallest id set
                Some((bt, bn, bl)) => {
                    key.0 > *bt
                        || (key.0 == *bt && key.1 < *bn)
                        || (key.0 == *bt && key.1 == *bn && key.2 < bl.as_slice())
                }
            };
            if better {
                best = Some((l.final_time, l.nodes.len(), l.nodes.to_vec()));
            }
        });
        let Some((_, _, load)) = best else {
            return Err(HeuristicError::Blocked(stations.len() + 1));
        };
        for &v in &load {
            assign.place(&sg, v);
        }
        stations.push(load);
    }

    let inst = g.instance();
    let loads = stations
        .iter()
        .map(|s| {
            s.iter()
                .map(|&v| {
                    let node = g.node(v);
                    (node.parent, node.q)
                })
                .collect()
        })
        .collect();
    let sol = Solution::evaluate_unchecked(inst, loads);
    debug_assert!(
        crate::solution::validate_solution(inst, &sol.stations).is_valid(),
        "heuristic produced an invalid solution"
    );
    Ok(sol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::Instance;
    use crate::solution::validate_solution;
    use crate::testdata;

    #[test]
    fn chain_of_full_tasks_forces_one_per_station() {
        let inst = Instance::new(
            vec![(1, 10), (2, 10), (3, 10)],
            vec![(1, 2), (2, 3)],
            10,
            vec![],
        )
        .unwrap();
        let g = ExpandedGraph::expand(&inst);
        let sol = mhh(&g, &HeuristicConfig::default()).unwrap();
        assert_eq!(sol.m(), 3);
    }

    #[test]
    fn undivided_policy_on_worked_instance() {
        let inst = testdata::worked_instance();
        let g = ExpandedGraph::expand(&inst);
        let cfg = HeuristicConfig { division_policy: DivisionPolicy::Never, ..Default::default() };
        let sol = mhh(&g, &cfg).unwrap();
        assert!(validate_solution(&inst, &sol.stations).is_valid());
        assert!(sol.stations.iter().flatten().all(|&(_, q)| q == 1));
        assert!(sol.m() >= 12, "SALBP optimum is 12, got {}", sol.m());
        assert_eq!(sol.penalty_total, 0);
    }

    #[test]
    fn division_policy_yields_valid_tdalbp_solution() {
        let inst = testdata::worked_instance();
        let g = ExpandedGraph::expand(&inst);
        let sol = mhh(&g, &HeuristicConfig::default()).unwrap();
        let report = validate_solution(&inst, &sol.stations);
        assert!(report.is_valid(), "{report}");
        assert!(sol.m() >= 11);
    }

    #[test]
    fn deterministic_runs() {
        let inst = testdata::worked_instance();
        let g = ExpandedGraph::expand(&inst);
        let a = mhh(&g, &HeuristicConfig::default()).unwrap();
        let b = mhh(&g, &HeuristicConfig::default()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn oversized_task_blocks_undivided_policy() {
        let inst = Instance::new(
            vec![(1, 12), (2, 2)],
            vec![(1, 2)],
            10,
            vec![crate::instance::DivisionSpec {
                task_id: 1,
                options: vec![
                    crate::instance::DivisionOption { sub_time: 7, penalty: 1 },
                    crate::instance::DivisionOption { sub_time: 5, penalty: 1 },
                ],
            }],
        )
        .unwrap();
        let g = ExpandedGraph::expand(&inst);
        let cfg = HeuristicConfig { division_policy: DivisionPolicy::Never, ..Default::default() };
        assert_eq!(mhh(&g, &cfg), Err(HeuristicError::Blocked(1)));
        let sol = mhh(&g, &HeuristicConfig::default()).unwrap();
        assert!(validate_solution(&inst, &sol.stations).is_valid());
    }
}
