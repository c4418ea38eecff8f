//! The EUC_2D subset of the CVRPLib/TSPLIB format.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::model::{DistanceMode, Instance, Node, Variant};

#[derive(Clone, Copy, PartialEq, Eq)]
enum Section {
    Header,
    Coords,
    Demands,
    Depots,
    Done,
}

fn parse_num<T: std::str::FromStr>(tok: &str, line: usize, what: &str) -> Result<T> {
    tok.parse().map_err(|_| Error::Parse {
        line,
        msg: format!("malformed {what} `{tok}`"),
    })
}

/// Parses a CVRPLib document. Distances use rounded Euclidean lengths and the
/// depot becomes node 0; other nodes keep their relative order.
pub fn parse_cvrplib(text: &str) -> Result<Instance> {
    let mut name = None;
    let mut dimension: Option<usize> = None;
    let mut capacity: Option<f64> = None;
    let mut weight_type = None;
    let mut coords: Vec<(usize, f64, f64, usize)> = Vec::new();
    let mut demands: Vec<(usize, f64, usize)> = Vec::new();
    let mut depots: Vec<usize> = Vec::new();
    let mut seen = [false; 3];
    let mut section = Section::Header;

    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        let keyword = line.split(|c: char| c == ':' || c.is_whitespace()).next().unwrap_or("");
        match keyword {
            "NODE_COORD_SECTION" => {
                section = Section::Coords;
                seen[0] = true;
                continue;
            }
            "DEMAND_SECTION" => {
                section = Section::Demands;
                seen[1] = true;
                continue;
            }
            "DEPOT_SECTION" => {
                section = Section::Depots;
                seen[2] = true;
                continue;
            }
            "EOF" => {
                section = Section::Done;
                continue;
            }
            _ => {}
        }
        if let Some((key, value)) = line.split_once(':') {
            if key.trim().chars().all(|c| c.is_ascii_uppercase() || c == '_') {
                let value = value.trim();
                match key.trim() {
                    "NAME" => name = Some(value.to_string()),
                    "DIMENSION" => dimension = Some(parse_num(value, line_no, "DIMENSION")?),
                    "CAPACITY" => capacity = Some(parse_num(value, line_no, "CAPACITY")?),
                    "EDGE_WEIGHT_TYPE" => weight_type = Some((value.to_string(), line_no)),
                    "TYPE" | "COMMENT" => {}
                    other => {
                        return Err(Error::Parse {
                            line: line_no,
                            msg: format!("unsupported keyword {other}"),
                        })
                    }
                }
                section = Section::Header;
                continue;
            }
        }
        let toks: Vec<&str> = line.split_whitespace().collect();
        match section {
            Section::Coords => {
                if toks.len() != 3 {
                    return Err(Error::Parse {
                        line: line_no,
                        msg: "NODE_COORD_SECTION entry needs `id x y`".into(),
                    });
                }
                coords.push((
                    parse_num(toks[0], line_no, "node id")?,
                    parse_num(toks[1], line_no, "coordinate")?,
                    parse_num(toks[2], line_no, "coordinate")?,
                    line_no,
                ));
            }
            Section::Demands => {
                if toks.len() != 2 {
                    return Err(Error::Parse {
                        line: line_no,
                        msg: "DEMAND_SECTION entry needs `id demand`".into(),
                    });
                }
                demands.push((
                    parse_num(toks[0], line_no, "node id")?,
                    parse_num(toks[1], line_no, "demand")?,
                    line_no,
                ));
            }
            Section::Depots => {
                let id: i64 = parse_num(toks[0], line_no, "depot id")?;
                if id == -1 {
                    section = Section::Header;
                } else if id <= 0 {
                    return Err(Error::Parse {
                        line: line_no,
                        msg: format!("invalid depot id {id}"),
                    });
                } else {
                    depots.push(id as usize);
                }
            }
            Section::Header | Section::Done => {
                return Err(Error::Parse {
                    line: line_no,
                    msg: format!("unexpected line `{line}`"),
                })
            }
        }
    }

    let dimension = dimension.ok_or_else(|| Error::MissingSection("DIMENSION".into()))?;
    let capacity = capacity.ok_or_else(|| Error::MissingSection("CAPACITY".into()))?;
    let (wt, wt_line) = weight_type.ok_or_else(|| Error::MissingSection("EDGE_WEIGHT_TYPE".into()))?;
    if wt != "EUC_2D" {
        return Err(Error::Parse {
            line: wt_line,
            msg: format!("EDGE_WEIGHT_TYPE {wt} is not supported, only EUC_2D"),
        });
    }
    for (flag, sec) in seen.iter().zip(["NODE_COORD_SECTION", "DEMAND_SECTION", "DEPOT_SECTION"]) {
        if !flag {
            return Err(Error::MissingSection(sec.into()));
        }
    }
    let count_err = |sec: &str, found: usize, line: usize| Error::Parse {
        line,
        msg: format!("{sec}: DIMENSION is {dimension} but {found} entries were given"),
    };
    if coords.len() != dimension {
        let line = coords.last().map_or(0, |c| c.3);
        return Err(count_err("NODE_COORD_SECTION", coords.len(), line));
    }
    if demands.len() != dimension {
        let line = demands.last().map_or(0, |d| d.2);
        return Err(count_err("DEMAND_SECTION", demands.len(), line));
    }
    if depots.len() != 1 {
        return Err(Error::Parse {
            line: 0,
            msg: format!("DEPOT_SECTION: expected one depot, found {}", depots.len()),
        });
    }

    let mut xy = vec![None; dimension + 1];
    for &(id, x, y, line) in &coords {
        if id == 0 || id > dimension || xy[id].is_some() {
            return Err(Error::Parse {
                line,
                msg: format!("NODE_COORD_SECTION: invalid or repeated node id {id}"),
            });
        }
        xy[id] = Some((x, y));
    }
    let mut dem = vec![None; dimension + 1];
    for &(id, d, line) in &demands {
        if id == 0 || id > dimension || dem[id].is_some() {
            return Err(Error::Parse {
                line,
                msg: format!("DEMAND_SECTION: invalid or repeated node id {id}"),
            });
        }
        dem[id] = Some(d);
    }
    let depot = depots[0];
    if depot > dimension {
        return Err(Error::Parse {
            line: 0,
            msg: format!("DEPOT_SECTION: depot {depot} exceeds DIMENSION"),
        });
    }
    let order = std::iter::once(depot).chain((1..=dimension).filter(|&id| id != depot));
    let nodes: Vec<Node> = order
        .map(|id| {
            let (x, y) = xy[id].expect("all ids checked");
            let d = if id == depot { 0.0 } else { dem[id].expect("all ids checked") };
            Node::customer(x, y, d)
        })
        .collect();
    Instance::new(
        name.unwrap_or_default(),
        Variant::Cvrp,
        nodes,
        capacity,
        DistanceMode::RoundedInt,
    )
}

/// Writes the canonical form read by [`parse_cvrplib`]: the depot is node 1.
pub fn write_cvrplib(instance: &Instance) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "NAME : {}", instance.id());
    let _ = writeln!(s, "TYPE : CVRP");
    let _ = writeln!(s, "DIMENSION : {}", instance.len());
    let _ = writeln!(s, "EDGE_WEIGHT_TYPE : EUC_2D");
    let _ = writeln!(s, "CAPACITY : {}", instance.capacity());
    s.push_str("NODE_COORD_SECTION\n");
    for (i, n) in instance.nodes().iter().enumerate() {
        let _ = writeln!(s, "{} {} {}", i + 1, n.x, n.y);
    }
    s.push_str("DEMAND_SECTION\n");
    for (i, n) in instance.nodes().iter().enumerate() {
        let _ = writeln!(s, "{} {}", i + 1, n.demand);
    }
    s.push_str("DEPOT_SECTION\n1\n-1\nEOF\n");
    s
}
