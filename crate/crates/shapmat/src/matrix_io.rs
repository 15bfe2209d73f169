//! Text grid persistence for [`ShapleyMatrix`].
//!
//! ```text
//! #anchor_order=5,2
//! player,2*,5*,9
//! 0,1.0000000000000000e-1,0.0000000000000000e0,NA
//! ```
//!
//! Cells carry 17 significant digits, which round-trips every finite `f64`.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use shapmat_core::{PlayerId, ShapleyMatrix, TaskId};

use crate::error::{HarnessError, Result};

const ORDER_PREFIX: &str = "#anchor_order=";

pub fn format_cell(v: Option<f64>) -> String {
    match v {
        Some(x) => format!("{x:.16e}"),
        None => "NA".to_string(),
    }
}

pub fn write_matrix(m: &ShapleyMatrix) -> String {
    let tasks: Vec<TaskId> = m.tasks().collect();
    let mut out = String::new();
    let order: Vec<String> = m.anchor_order().iter().map(|t| t.0.to_string()).collect();
    writeln!(out, "{ORDER_PREFIX}{}", order.join(",")).unwrap();
    out.push_str("player");
    for t in &tasks {
        write!(out, ",{}{}", t.0, if m.is_anchor(*t) { "*" } else { "" }).unwrap();
    }
    out.push('\n');
    let columns: Vec<&[Option<f64>]> = tasks
        .iter()
        .map(|t| m.column_values(*t).expect("listed task"))
        .collect();
    for (i, p) in m.players().iter().enumerate() {
        out.push_str(&p.0.to_string());
        for c in &columns {
            out.push(',');
            out.push_str(&format_cell(c[i]));
        }
        out.push('\n');
    }
    out
}

fn parse_id(s: &str, line: usize, what: &str) -> Result<u32> {
    s.trim()
        .parse()
        .map_err(|_| HarnessError::parse(line, format!("bad {what} id {s:?}")))
}

pub fn read_matrix(text: &str) -> Result<ShapleyMatrix> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    let (n, first) = lines
        .next()
        .ok_or_else(|| HarnessError::parse(1, "empty matrix file"))?;
    let order_text = first
        .strip_prefix(ORDER_PREFIX)
        .ok_or_else(|| HarnessError::parse(n, "expected anchor order line"))?;
    let order: Vec<TaskId> = order_text
        .split(',')
        .filter(|s| !s.is_empty())
        .map(|s| parse_id(s, n, "anchor").map(TaskId))
        .collect::<Result<_>>()?;

    let (n, header) = lines
        .next()
        .ok_or_else(|| HarnessError::parse(2, "missing header row"))?;
    let mut fields = header.split(',');
    if fields.next() != Some("player") {
        return Err(HarnessError::parse(n, "header must start with `player`"));
    }
    let mut tasks = Vec::new();
    let mut flagged = Vec::new();
    for f in fields {
        let (id, anchor) = match f.strip_suffix('*') {
            Some(id) => (id, true),
            None => (f, false),
        };
        let t = TaskId(parse_id(id, n, "task")?);
        if anchor {
            flagged.push(t);
        }
        tasks.push(t);
    }
    let mut sorted_order = order.clone();
    sorted_order.sort_unstable();
    flagged.sort_unstable();
    if sorted_order != flagged {
        return Err(HarnessError::parse(n, "anchor flags disagree with the anchor order line"));
    }

    let mut players = Vec::new();
    let mut cells: Vec<Vec<Option<f64>>> = vec![Vec::new(); tasks.len()];
    for (n, line) in lines {
        if line.is_empty() {
            continue;
        }
        let mut fields = line.split(',');
        players.push(PlayerId(parse_id(fields.next().unwrap_or(""), n, "player")?));
        let mut count = 0;
        for (j, f) in fields.enumerate() {
            if j >= tasks.len() {
                return Err(HarnessError::parse(n, "more cells than tasks"));
            }
            let v = match f {
                "NA" => None,
                _ => Some(
                    f.parse::<f64>()
                        .map_err(|_| HarnessError::parse(n, format!("bad cell {f:?}")))?,
                ),
            };
            cells[j].push(v);
            count += 1;
        }
        if count != tasks.len() {
            return Err(HarnessError::parse(n, format!("expected {} cells, found {count}", tasks.len())));
        }
    }
    ShapleyMatrix::from_parts(players, tasks, cells, order).map_err(HarnessError::from)
}

pub fn save_matrix(m: &ShapleyMatrix, path: &Path) -> Result<()> {
    fs::write(path, write_matrix(m)).map_err(|e| HarnessError::io(path, e))
}

pub fn load_matrix(path: &Path) -> Result<ShapleyMatrix> {
    let text = fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
    read_matrix(&text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use shapmat_core::{Provenance, ValueColumn};

    fn column(t: u32, values: &[(u32, f64)]) -> ValueColumn {
        let mut c = ValueColumn::new(TaskId(t), Provenance::ExactLocal);
        c.entries = values.iter().map(|(p, v)| (PlayerId(*p), *v)).collect();
        c
    }

    #[test]
    fn text_layout() {
        let mut m = ShapleyMatrix::new([PlayerId(0), PlayerId(1)]).unwrap();
        m.append_proxy_column(&column(1, &[(0, 0.5)]), true, PlayerId(1)).unwrap();
        m.append_column(&column(7, &[(1, -2.0)]), false).unwrap();
        let text = write_matrix(&m);
        assert_eq!(
            text,
            "#anchor_order=1\nplayer,1*,7\n0,5.0000000000000000e-1,0.0000000000000000e0\n1,NA,-2.0000000000000000e0\n"
        );
        let back = read_matrix(&text).unwrap();
        assert_eq!(write_matrix(&back), text);
        assert_eq!(back.proxy_of(TaskId(1)), Some(PlayerId(1)));
    }

    #[test]
    fn awkward_values_round_trip() {
        let vals = [0.1 + 0.2, -1.0 / 3.0, 1e-300, f64::MIN_POSITIVE, 123_456_789.123_456_79, -0.0];
        let mut m = ShapleyMatrix::new((0..vals.len() as u32).map(PlayerId)).unwrap();
        let entries: Vec<(u32, f64)> = vals.iter().enumerate().map(|(i, v)| (i as u32, *v)).collect();
        m.append_column(&column(99, &entries), true).unwrap();
        let back = read_matrix(&write_matrix(&m)).unwrap();
        for (i, v) in vals.iter().enumerate() {
            let got = back.get(PlayerId(i as u32), TaskId(99)).unwrap().unwrap();
            assert_eq!(got.to_bits(), v.to_bits());
        }
    }

    #[test]
    fn errors_name_the_line() {
        let bad = "#anchor_order=\nplayer,3\n0,1.0\n1,oops\n";
        match read_matrix(bad).unwrap_err() {
            HarnessError::Parse { line, .. } => assert_eq!(line, 4),
            e => panic!("{e}"),
        }
        let flags = "#anchor_order=3\nplayer,3\n0,1.0\n";
        assert!(matches!(read_matrix(flags), Err(HarnessError::Parse { line: 2, .. })));
        assert!(read_matrix("player,3\n").is_err());
    }
}
