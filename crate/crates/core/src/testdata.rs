//! Hand-built instances shared across unit tests.

use crate::instance::{DivisionOption, DivisionSpec, Instance};

/// The 23-task worked instance at cycle time 10: six divisible tasks, each
/// with three processing options and unit penalties.
pub fn worked_instance() -> Instance {
    let times: [(u32, u32); 23] = [
        (1, 5),
        (2, 6),
        (3, 7),
        (4, 2),
        (5, 5),
        (6, 3),
        (7, 1),
        (8, 8),
        (9, 8),
        (10, 6),
        (11, 4),
        (12, 2),
        (13, 5),
        (14, 8),
        (15, 2),
        (16, 3),
        (17, 1),
        (18, 8),
        (19, 3),
        (20, 3),
        (21, 2),
        (22, 2),
        (23, 6),
    ];
    let arcs: [(u32, u32); 27] = [
        (1, 3),
        (2, 4),
        (3, 5),
        (4, 5),
        (5, 6),
        (5, 7),
        (5, 8),
        (6, 9),
        (6, 10),
        (7, 11),
        (8, 12),
        (9, 13),
        (10, 14),
        (11, 15),
        (12, 16),
        (13, 17),
        (14, 17),
        (15, 18),
        (16, 18),
        (17, 19),
        (17, 20),
        (18, 21),
        (18, 22),
        (19, 23),
        (20, 23),
        (21, 23),
        (22, 23),
    ];
    let div = |task_id, a: (u32, u32), b: (u32, u32)| DivisionSpec {
        task_id,
        options: vec![
            DivisionOption { sub_time: a.0, penalty: a.1 },
            DivisionOption { sub_time: b.0, penalty: b.1 },
        ],
    };
    let divisions = vec![
        div(2, (3, 1), (3, 1)),
        div(3, (4, 1), (3, 1)),
        div(9, (6, 1), (2, 1)),
        div(13, (3, 1), (2, 1)),
        div(14, (5, 1), (3, 1)),
        div(18, (6, 1), (2, 1)),
    ];
    Instance::new(times.to_vec(), arcs.to_vec(), 10, divisions).unwrap()
}

/// SALBP-1 view of [`worked_instance`].
pub fn worked_instance_salbp() -> Instance {
    worked_instance().without_divisions()
}
