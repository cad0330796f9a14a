//! Text formats for instances and solutions.
//!
//! Instance grammar (`alb`, line oriented; `#` starts a comment line,
//! blank lines are ignored):
//!
//! ```text
//! CYCLE <c>        optional; cycle time may instead come from the caller
//! <n>
//! <id> <time>      n lines
//! <i>,<j>          arc lines
//! -1,-1
//! ```
//!
//! The `tdalb` extension accepts the same content followed by an optional
//! division section:
//!
//! ```text
//! DIVISIONS
//! <j> : <t2>/<f2> ; <t3>/<f3> ; ...
//! ```
//!
//! Options are listed in nonincreasing given-time order, `q = 2..=r_j`.
//!
//! Solutions are one station per line, tokens `j` (undivided) or `j^q`
//! (subtask option `q`), e.g. `3^2 5 7`.

use std::fmt::Write as _;

use thiserror::Error;

use crate::instance::{DivisionOption, DivisionSpec, Instance, InstanceError, TaskId};

/// Supported instance file dialects.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Alb,
    Tdalb,
}

impl Format {
    /// Pick a dialect from a file name extension, defaulting to `tdalb`.
    pub fn from_path(path: &str) -> Format {
        if path.rsplit('.').next().is_some_and(|e| e.eq_ignore_ascii_case("alb")) {
            Format::Alb
        } else {
            Format::Tdalb
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ParseError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("cycle time missing: no CYCLE line and no override given")]
    MissingCycleTime,
    #[error(transparent)]
    Instance(#[from] InstanceError),
}

fn syntax(line: usize, msg: impl Into<String>) -> ParseError {
    ParseError::Syntax { line, msg: msg.into() }
}

/// Parse an instance from text.
///
/// `cycle_override`, when given, wins over a `CYCLE` line in the file.
pub fn parse_instance(
    text: &str,
    format: Format,
    cycle_override: Option<u32>,
) -> Result<Instance, ParseError> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));

    let mut cycle_from_file = None;
    let (mut lno, mut line) = lines
        .next()
        .ok_or_else(|| syntax(0, "empty instance file"))?;
    if let Some(rest) = line.strip_prefix("CYCLE") {
        let c: u32 = rest
            .trim()
            .parse()
            .map_err(|_| syntax(lno, "malformed CYCLE line"))?;
        cycle_from_file = Some(c);
        (lno, line) = lines
            .next()
            .ok_or_else(|| syntax(lno, "missing task count after CYCLE"))?;
    }
    let n: usize = line
        .parse()
        .map_err(|_| syntax(lno, format!("expected task count, got '{line}'")))?;

    let mut tasks = Vec::with_capacity(n);
    for _ in 0..n {
        let (lno, line) = lines
            .next()
            .ok_or_else(|| syntax(lno, "unexpected end of file in task list"))?;
        let mut it = line.split_whitespace();
        let id: u32 = it
            .next()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| syntax(lno, format!("expected 'id time', got '{line}'")))?;
        let time: u32 = it
            .next()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| syntax(lno, format!("expected 'id time', got '{line}'")))?;
        if it.next().is_some() {
            return Err(syntax(lno, format!("trailing tokens in task line '{line}'")));
        }
        tasks.push((id, time));
    }

    let mut arcs = Vec::new();
    let mut divisions = Vec::new();
    let mut in_divisions = false;
    let mut terminated = false;
    for (lno, line) in lines {
        if in_divisions {
            divisions.push(parse_division_line(lno, line)?);
            continue;
        }
        if terminated {
            if line == "DIVISIONS" {
                if format == Format::Alb {
                    return Err(syntax(lno, "DIVISIONS section not allowed in alb format"));
                }
                in_divisions = true;
                continue;
            }
            return Err(syntax(lno, format!("unexpected content after arc list: '{line}'")));
        }
        let (i, j) = parse_arc(lno, line)?;
        if (i, j) == (-1, -1) {
            terminated = true;
            continue;
        }
        if i < 1 || j < 1 {
            return Err(syntax(lno, format!("arc endpoints must be positive: '{line}'")));
        }
        arcs.push((i as u32, j as u32));
    }
    if !terminated {
        return Err(syntax(0, "arc list not terminated by -1,-1"));
    }

    let cycle = cycle_override
        .or(cycle_from_file)
        .ok_or(ParseError::MissingCycleTime)?;
    Ok(Instance::new(tasks, arcs, cycle, divisions)?)
}

fn parse_arc(lno: usize, line: &str) -> Result<(i64, i64), ParseError> {
    let (a, b) = line
        .split_once(',')
        .ok_or_else(|| syntax(lno, format!("expected arc 'i,j', got '{line}'")))?;
    let i: i64 = a
        .trim()
        .parse()
        .map_err(|_| syntax(lno, format!("malformed arc '{line}'")))?;
    let j: i64 = b
        .trim()
        .parse()
        .map_err(|_| syntax(lno, format!("malformed arc '{line}'")))?;
    Ok((i, j))
}

fn parse_division_line(lno: usize, line: &str) -> Result<DivisionSpec, ParseError> {
    let (task, opts) = line
        .split_once(':')
        .ok_or_else(|| syntax(lno, format!("expected 'j : t/f ; ...', got '{line}'")))?;
    let task_id: TaskId = task
        .trim()
        .parse()
        .map_err(|_| syntax(lno, format!("malformed task id in '{line}'")))?;
    let mut options = Vec::new();
    for part in opts.split(';') {
        let part = part.trim();
        if part.is_empty() {
            return Err(syntax(lno, format!("empty option in '{line}'")));
        }
        let (t, f) = part
            .split_once('/')
            .ok_or_else(|| syntax(lno, format!("expected 't/f' option, got '{part}'")))?;
        let sub_time: u32 = t
            .trim()
            .parse()
            .map_err(|_| syntax(lno, format!("malformed option time '{part}'")))?;
        let penalty: u32 = f
            .trim()
            .parse()
            .map_err(|_| syntax(lno, format!("malformed option penalty '{part}'")))?;
        options.push(DivisionOption { sub_time, penalty });
    }
    Ok(DivisionSpec { task_id, options })
}

/// Canonical text form. The appended dummy terminal, if any, is omitted so
/// that parse -> serialize -> parse is the identity.
pub fn serialize_instance(inst: &Instance) -> String {
    let mut out = String::new();
    let skip = inst.dummy_terminal();
    let n = inst.n() - skip.is_some() as usize;
    writeln!(out, "CYCLE {}", inst.cycle_time()).unwrap();
    writeln!(out, "{n}").unwrap();
    for t in inst.tasks() {
        if Some(t.id) == skip {
            continue;
        }
        writeln!(out, "{} {}", t.id, t.time).unwrap();
    }
    for &(i, j) in inst.arcs() {
        if Some(j) == skip {
            continue;
        }
        writeln!(out, "{i},{j}").unwrap();
    }
    writeln!(out, "-1,-1").unwrap();
    if inst.divisions().next().is_some() {
        writeln!(out, "DIVISIONS").unwrap();
        for spec in inst.divisions() {
            let opts: Vec<String> = spec
                .options
                .iter()
                .map(|o| format!("{}/{}", o.sub_time, o.penalty))
                .collect();
            writeln!(out, "{} : {}", spec.task_id, opts.join(" ; ")).unwrap();
        }
    }
    out
}

/// Station loads in `j`/`j^q` notation, one station per line.
pub fn parse_solution_text(text: &str) -> Result<Vec<Vec<(TaskId, u8)>>, ParseError> {
    let mut stations = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut load = Vec::new();
        for tok in line.split_whitespace() {
            let (id, q) = match tok.split_once('^') {
                None => (tok, 1u8),
                Some((id, q)) => (
                    id,
                    q.parse()
                        .map_err(|_| syntax(i + 1, format!("malformed option index '{tok}'")))?,
                ),
            };
            let id: TaskId = id
                .parse()
                .map_err(|_| syntax(i + 1, format!("malformed task token '{tok}'")))?;
            if q < 1 {
                return Err(syntax(i + 1, format!("option index must be >= 1 in '{tok}'")));
            }
            load.push((id, q));
        }
        stations.push(load);
    }
    Ok(stations)
}

pub fn serialize_solution(stations: &[Vec<(TaskId, u8)>]) -> String {
    let mut out = String::new();
    for load in stations {
        let toks: Vec<String> = load
            .iter()
            .map(|&(id, q)| if q == 1 { id.to_string() } else { format!("{id}^{q}") })
            .collect();
        writeln!(out, "{}", toks.join(" ")).unwrap();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testdata;

    const MERTENS: &str = "\
7
1 1
2 5
3 4
4 3
5 5
6 6
7 5
1,2
1,5
2,3
2,4
3,6
4,6
5,7
6,7
-1,-1
";

    #[test]
    fn parses_benchmark_text() {
        let inst = parse_instance(MERTENS, Format::Alb, Some(8)).unwrap();
        assert_eq!(inst.n(), 7);
        assert_eq!(inst.total_time(), 29);
        assert_eq!(inst.cycle_time(), 8);
        assert_eq!(inst.dummy_terminal(), None);
    }

    #[test]
    fn single_task_instance_has_no_dummy() {
        let inst = parse_instance("1\n1 5\n-1,-1\n", Format::Alb, Some(10)).unwrap();
        assert_eq!(inst.n(), 1);
        assert_eq!(inst.dummy_terminal(), None);
    }

    #[test]
    fn cycle_line_and_override() {
        let text = "CYCLE 9\n1\n1 5\n-1,-1\n";
        assert_eq!(parse_instance(text, Format::Alb, None).unwrap().cycle_time(), 9);
        assert_eq!(parse_instance(text, Format::Alb, Some(7)).unwrap().cycle_time(), 7);
        assert_eq!(
            parse_instance("1\n1 5\n-1,-1\n", Format::Alb, None).unwrap_err(),
            ParseError::MissingCycleTime
        );
    }

    #[test]
    fn syntax_errors_carry_line_numbers() {
        let err = parse_instance("2\n1 5\nbogus\n-1,-1\n", Format::Alb, Some(9)).unwrap_err();
        assert!(matches!(err, ParseError::Syntax { line: 3, .. }), "{err:?}");
        let err = parse_instance("1\n1 0\n-1,-1\n", Format::Alb, Some(9)).unwrap_err();
        assert!(matches!(err, ParseError::Instance(InstanceError::NonPositiveTime(1))));
    }

    #[test]
    fn divisions_rejected_in_alb() {
        let text = "1\n1 5\n-1,-1\nDIVISIONS\n1 : 3/1 ; 2/1\n";
        let err = parse_instance(text, Format::Alb, Some(9)).unwrap_err();
        assert!(matches!(err, ParseError::Syntax { .. }));
    }

    #[test]
    fn worked_instance_round_trips() {
        let inst = testdata::worked_instance();
        let text = serialize_instance(&inst);
        let reparsed = parse_instance(&text, Format::Tdalb, None).unwrap();
        assert_eq!(inst, reparsed);
        assert_eq!(text, serialize_instance(&reparsed));
    }

    #[test]
    fn dummy_terminal_round_trips() {
        let inst = parse_instance("2\n1 5\n2 4\n-1,-1\n", Format::Alb, Some(10)).unwrap();
        assert_eq!(inst.dummy_terminal(), Some(3));
        let text = serialize_instance(&inst);
        let reparsed = parse_instance(&text, Format::Tdalb, None).unwrap();
        assert_eq!(inst, reparsed);
    }

    #[test]
    fn solution_notation_round_trips() {
        let text = "2 4\n1 3^2\n3^3 5 7\n";
        let sol = parse_solution_text(text).unwrap();
        assert_eq!(sol[1], vec![(1, 1), (3, 2)]);
        assert_eq!(serialize_solution(&sol), text);
    }
}
