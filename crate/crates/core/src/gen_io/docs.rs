//! Line-oriented instance, solution and prediction documents, and the JSONL
//! trace stream.

use std::fmt::Write as _;
use std::io::{BufRead, Write};

use crate::driver::TraceRecord;
use crate::error::{Error, Result};
use crate::model::{DistanceMode, EdgeSet, Instance, Node, Solution, Variant};

fn schema(line: usize, msg: impl Into<String>) -> Error {
    Error::Schema {
        path: format!("line {line}"),
        msg: msg.into(),
    }
}

fn num<T: std::str::FromStr>(tok: &str, line: usize, what: &str) -> Result<T> {
    tok.parse().map_err(|_| schema(line, format!("malformed {what} `{tok}`")))
}

/// Numbered non-empty lines.
fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty())
}

pub fn write_instance_doc(instance: &Instance) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "instance {}", instance.id());
    let _ = writeln!(s, "variant {}", instance.variant());
    let _ = writeln!(s, "capacity {}", instance.capacity());
    let _ = writeln!(s, "distance {}", instance.distance_mode().as_str());
    let _ = writeln!(s, "nodes {}", instance.len());
    s.push_str("# index x y demand service_time tw_open tw_close backhaul\n");
    for (i, n) in instance.nodes().iter().enumerate() {
        let _ = writeln!(
            s,
            "{i} {} {} {} {} {} {} {}",
            n.x,
            n.y,
            n.demand,
            n.service_time,
            n.tw_open,
            n.tw_close,
            u8::from(n.is_backhaul)
        );
    }
    s.push_str("end\n");
    s
}

pub fn read_instance_doc(text: &str) -> Result<Instance> {
    let mut lines = content_lines(text).filter(|(_, l)| !l.starts_with('#'));
    let mut header = |key: &str| -> Result<(usize, String)> {
        let (no, line) = lines
            .next()
            .ok_or_else(|| Error::Schema { path: key.into(), msg: "missing header field".into() })?;
        match line.split_once(' ') {
            Some((k, v)) if k == key => Ok((no, v.trim().to_string())),
            _ => Err(schema(no, format!("expected `{key} <value>`"))),
        }
    };
    let (_, id) = header("instance")?;
    let (no, variant) = header("variant")?;
    let variant: Variant = variant.parse().map_err(|_| schema(no, format!("unknown variant {variant}")))?;
    let (no, capacity) = header("capacity")?;
    let capacity: f64 = num(&capacity, no, "capacity")?;
    let (no, mode) = header("distance")?;
    let mode: DistanceMode = mode.parse().map_err(|_| schema(no, format!("unknown distance mode {mode}")))?;
    let (no, count) = header("nodes")?;
    let count: usize = num(&count, no, "node count")?;

    let mut nodes = Vec::with_capacity(count);
    for i in 0..count {
        let (no, line) = lines
            .next()
            .ok_or_else(|| Error::Schema { path: format!("nodes[{i}]"), msg: "missing node row".into() })?;
        let t: Vec<&str> = line.split_whitespace().collect();
        if t.len() != 8 {
            return Err(schema(no, "node row needs 8 fields"));
        }
        if num::<usize>(t[0], no, "index")? != i {
            return Err(schema(no, format!("expected node index {i}")));
        }
        nodes.push(Node {
            x: num(t[1], no, "x")?,
            y: num(t[2], no, "y")?,
            demand: num(t[3], no, "demand")?,
            service_time: num(t[4], no, "service time")?,
            tw_open: num(t[5], no, "window open")?,
            tw_close: num(t[6], no, "window close")?,
            is_backhaul: match t[7] {
                "0" => false,
                "1" => true,
                other => return Err(schema(no, format!("backhaul flag must be 0 or 1, got {other}"))),
            },
        });
    }
    match lines.next() {
        Some((_, "end")) => {}
        Some((no, _)) => return Err(schema(no, "expected `end`")),
        None => return Err(Error::Schema { path: "end".into(), msg: "missing `end`".into() }),
    }
    if let Some((no, _)) = lines.next() {
        return Err(schema(no, "content after `end`"));
    }
    Instance::new(id, variant, nodes, capacity, mode)
}

/// Routes are numbered from 1 and written with both depot visits.
pub fn write_solution_doc(solution: &Solution, objective: f64) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "objective {objective}");
    for (i, route) in solution.routes.iter().enumerate() {
        let _ = write!(s, "route {}: 0", i + 1);
        for c in route {
            let _ = write!(s, " {c}");
        }
        s.push_str(" 0\n");
    }
    s
}

pub fn read_solution_doc(text: &str) -> Result<(Solution, f64)> {
    let mut lines = content_lines(text);
    let (no, first) = lines
        .next()
        .ok_or_else(|| Error::Schema { path: "objective".into(), msg: "empty document".into() })?;
    let objective = match first.split_once(' ') {
        Some(("objective", v)) => num(v.trim(), no, "objective")?,
        _ => return Err(schema(no, "expected `objective <real>`")),
    };
    let mut routes = Vec::new();
    for (no, line) in lines {
        let rest = line
            .strip_prefix("route ")
            .ok_or_else(|| schema(no, "expected `route <i>: 0 ... 0`"))?;
        let (idx, body) = rest.split_once(':').ok_or_else(|| schema(no, "missing `:` after route number"))?;
        let idx: usize = num(idx.trim(), no, "route number")?;
        if idx != routes.len() + 1 {
            return Err(schema(no, format!("expected route {}", routes.len() + 1)));
        }
        let ids: Vec<usize> = body
            .split_whitespace()
            .map(|t| num(t, no, "node index"))
            .collect::<Result<_>>()?;
        if ids.len() < 3 || ids[0] != 0 || ids[ids.len() - 1] != 0 {
            return Err(schema(no, "route must start and end at the depot and visit a customer"));
        }
        let inner = ids[1..ids.len() - 1].to_vec();
        if inner.contains(&0) {
            return Err(schema(no, "depot inside a route"));
        }
        routes.push(inner);
    }
    Ok((Solution::new(routes), objective))
}

pub fn write_prediction_doc(instance_id: &str, unstable: &EdgeSet) -> String {
    let mut s = format!("instance {instance_id}\n");
    for e in unstable.iter() {
        let _ = writeln!(s, "unstable {} {}", e.lo(), e.hi());
    }
    s
}

/// Reads a prediction for an instance with `n_nodes` nodes.
pub fn read_prediction_doc(text: &str, n_nodes: usize) -> Result<(String, EdgeSet)> {
    let mut lines = content_lines(text);
    let (no, first) = lines
        .next()
        .ok_or_else(|| Error::Schema { path: "instance".into(), msg: "empty document".into() })?;
    let id = match first.split_once(' ') {
        Some(("instance", v)) => v.trim().to_string(),
        _ => return Err(schema(no, "expected `instance <id>`")),
    };
    let mut set = EdgeSet::new();
    for (no, line) in lines {
        let (i, j) = parse_unstable_line(line, no, n_nodes)?;
        set.insert(i, j);
    }
    Ok((id, set))
}

/// Parses `unstable <i> <j>` with both indices below `n_nodes` and distinct.
pub(crate) fn parse_unstable_line(line: &str, no: usize, n_nodes: usize) -> Result<(usize, usize)> {
    let t: Vec<&str> = line.split_whitespace().collect();
    if t.len() != 3 || t[0] != "unstable" {
        return Err(schema(no, "expected `unstable <i> <j>`"));
    }
    let i: usize = num(t[1], no, "node index")?;
    let j: usize = num(t[2], no, "node index")?;
    for v in [i, j] {
        if v >= n_nodes {
            return Err(schema(no, format!("unknown node index {v}")));
        }
    }
    if i == j {
        return Err(schema(no, "an edge needs two distinct nodes"));
    }
    Ok((i, j))
}

pub fn write_trace_record<W: Write>(mut w: W, record: &TraceRecord) -> Result<()> {
    serde_json::to_writer(&mut w, record)?;
    w.write_all(b"\n")?;
    Ok(())
}

pub fn write_trace_stream<W: Write>(mut w: W, records: &[TraceRecord]) -> Result<()> {
    for r in records {
        write_trace_record(&mut w, r)?;
    }
    Ok(())
}

pub fn read_trace_stream<R: BufRead>(reader: R) -> Result<Vec<TraceRecord>> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: TraceRecord = serde_json::from_str(&line).map_err(|e| schema(i + 1, e.to_string()))?;
        rec.validate().map_err(|msg| schema(i + 1, msg))?;
        out.push(rec);
    }
    Ok(out)
}
