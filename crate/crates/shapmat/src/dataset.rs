//! CSV ingestion.
//!
//! Points: header `id,label,f1,...,fd` optionally followed by `e1,...,ek`
//! embedding columns. Graphs: header `source,target`, one undirected edge
//! per row.

use std::collections::BTreeSet;
use std::fs::File;
use std::io::Read;
use std::path::Path;

use shapmat_core::{DataPoint, Graph};

use crate::error::{HarnessError, Result};

fn reader<R: Read>(r: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_reader(r)
}

fn line_of(record: &csv::StringRecord, fallback: usize) -> usize {
    record.position().map(|p| p.line() as usize).unwrap_or(fallback)
}

fn csv_error(e: csv::Error) -> HarnessError {
    let line = e.position().map(|p| p.line() as usize).unwrap_or(0);
    HarnessError::parse(line, e.to_string())
}

/// Counts a run of `prefix1, prefix2, ...` columns starting at `from`.
fn numbered_run(header: &csv::StringRecord, from: usize, prefix: &str) -> usize {
    (from..header.len())
        .take_while(|&i| header[i] == format!("{prefix}{}", i - from + 1))
        .count()
}

pub fn read_points<R: Read>(input: R) -> Result<Vec<DataPoint>> {
    let mut rdr = reader(input);
    let mut records = rdr.records();
    let header = match records.next() {
        Some(h) => h.map_err(csv_error)?,
        None => return Err(HarnessError::parse(1, "missing header")),
    };
    if header.get(0) != Some("id") || header.get(1) != Some("label") {
        return Err(HarnessError::parse(1, "header must start with `id,label`"));
    }
    let d = numbered_run(&header, 2, "f");
    if d == 0 {
        return Err(HarnessError::parse(1, "header declares no feature columns f1.."));
    }
    let k = numbered_run(&header, 2 + d, "e");
    if 2 + d + k != header.len() {
        return Err(HarnessError::parse(
            1,
            format!("unexpected column {:?}", &header[2 + d + k]),
        ));
    }
    let mut seen = BTreeSet::new();
    let mut points = Vec::new();
    for (i, rec) in records.enumerate() {
        let rec = rec.map_err(csv_error)?;
        let line = line_of(&rec, i + 2);
        if rec.len() != header.len() {
            return Err(HarnessError::parse(
                line,
                format!("expected {} fields, found {}", header.len(), rec.len()),
            ));
        }
        let id: u32 = rec[0]
            .parse()
            .map_err(|_| HarnessError::parse(line, format!("bad id {:?}", &rec[0])))?;
        if !seen.insert(id) {
            return Err(HarnessError::parse(line, format!("duplicate id {id}")));
        }
        let label: u32 = rec[1]
            .parse()
            .map_err(|_| HarnessError::parse(line, format!("bad label {:?}", &rec[1])))?;
        let nums: Vec<f64> = (2..rec.len())
            .map(|j| match rec[j].parse::<f64>() {
                Ok(x) if x.is_finite() => Ok(x),
                _ => Err(HarnessError::parse(line, format!("bad number {:?} in column {}", &rec[j], &header[j]))),
            })
            .collect::<Result<_>>()?;
        let mut p = DataPoint::new(id, nums[..d].to_vec(), label);
        if k > 0 {
            p.embedding = Some(nums[d..].to_vec());
        }
        points.push(p);
    }
    Ok(points)
}

pub fn read_edges<R: Read>(input: R) -> Result<Graph> {
    let mut rdr = reader(input);
    let mut records = rdr.records();
    match records.next() {
        Some(h) => {
            let h = h.map_err(csv_error)?;
            if h.len() != 2 || &h[0] != "source" || &h[1] != "target" {
                return Err(HarnessError::parse(1, "edge header must be `source,target`"));
            }
        }
        None => return Err(HarnessError::parse(1, "missing header")),
    }
    let mut g = Graph::new();
    for (i, rec) in records.enumerate() {
        let rec = rec.map_err(csv_error)?;
        let line = line_of(&rec, i + 2);
        let node = |j: usize| -> Result<u32> {
            rec.get(j)
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| HarnessError::parse(line, "edges need two integer node ids"))
        };
        if rec.len() != 2 {
            return Err(HarnessError::parse(line, "edges need two integer node ids"));
        }
        g.add_edge(node(0)?, node(1)?);
    }
    Ok(g)
}

fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|e| HarnessError::io(path, e))
}

pub fn load_points(path: &Path) -> Result<Vec<DataPoint>> {
    read_points(open(path)?)
}

pub fn load_edges(path: &Path) -> Result<Graph> {
    read_edges(open(path)?)
}

pub fn write_points(points: &[DataPoint]) -> String {
    let d = points.first().map_or(0, |p| p.features.len());
    let k = points
        .first()
        .and_then(|p| p.embedding.as_ref())
        .map_or(0, |e| e.len());
    let mut header = vec!["id".to_string(), "label".to_string()];
    header.extend((1..=d).map(|i| format!("f{i}")));
    header.extend((1..=k).map(|i| format!("e{i}")));
    let mut out = header.join(",");
    out.push('\n');
    for p in points {
        let mut row = vec![p.id.to_string(), p.label.to_string()];
        row.extend(p.features.iter().map(|x| format!("{x:?}")));
        if let Some(e) = &p.embedding {
            row.extend(e.iter().map(|x| format!("{x:?}")));
        }
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

pub fn write_edges(g: &Graph) -> String {
    let mut out = String::from("source,target\n");
    for (u, v) in g.edges() {
        out.push_str(&format!("{u},{v}\n"));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn three_rows() {
        let text = "id,label,f1,f2\n0,1,0.5,1\n1,0,-2,3e-1\n7,2,0,0\n";
        let pts = read_points(text.as_bytes()).unwrap();
        assert_eq!(pts.len(), 3);
        assert_eq!(pts[1].features, vec![-2.0, 0.3]);
        assert_eq!(pts[2].id, 7);
        assert_eq!(pts[2].label, 2);
        assert!(pts[0].embedding.is_none());
    }

    #[test]
    fn embeddings_are_split_off() {
        let text = "id,label,f1,e1,e2\n3,0,1.5,0.25,-1\n";
        let pts = read_points(text.as_bytes()).unwrap();
        assert_eq!(pts[0].features, vec![1.5]);
        assert_eq!(pts[0].embedding, Some(vec![0.25, -1.0]));
    }

    #[test]
    fn schema_errors_carry_lines() {
        let cases = [
            ("id,f1,f2\n0,1,2\n", 1),
            ("id,label\n0,1\n", 1),
            ("id,label,f1,x\n0,1,2,3\n", 1),
            ("id,label,f1\n0,1,2\n1,0,abc\n", 3),
            ("id,label,f1\n0,1,2\n0,0,1\n", 3),
            ("id,label,f1\n0,1,2\n1,0\n", 3),
            ("", 1),
        ];
        for (text, want) in cases {
            match read_points(text.as_bytes()) {
                Err(HarnessError::Parse { line, .. }) => assert_eq!(line, want, "{text:?}"),
                other => panic!("{text:?}: {other:?}"),
            }
        }
    }

    #[test]
    fn points_round_trip_through_text() {
        let mut a = DataPoint::new(4, vec![0.1 + 0.2, -1e-17], 1);
        a.embedding = Some(vec![1.0 / 3.0]);
        let mut b = DataPoint::new(9, vec![2.0, 3.0], 0);
        b.embedding = Some(vec![0.0]);
        let back = read_points(write_points(&[a.clone(), b.clone()]).as_bytes()).unwrap();
        assert_eq!(back, vec![a, b]);
    }

    #[test]
    fn edge_lists() {
        let g = read_edges("source,target\n0,1\n1,2\n".as_bytes()).unwrap();
        assert_eq!(g.node_count(), 3);
        assert_eq!(g.degree(1), 2);
        let back = read_edges(write_edges(&g).as_bytes()).unwrap();
        assert_eq!(back.edges().collect::<Vec<_>>(), g.edges().collect::<Vec<_>>());
        assert!(matches!(
            read_edges("source,target\n0,x\n".as_bytes()),
            Err(HarnessError::Parse { line: 2, .. })
        ));
        assert!(matches!(read_edges("a,b\n".as_bytes()), Err(HarnessError::Parse { line: 1, .. })));
    }
}
