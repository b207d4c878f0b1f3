//! Sparse interchange format for block-diagonal SDPs.
//!
//! Layout: optional comment lines (leading `*` or `"`), then the number of
//! constraints, the number of blocks, the block sizes (negative size marks a
//! diagonal block), the right-hand sides, and one line per nonzero entry
//! `k b i j v` with 1-based indices, upper triangle only; `k = 0` is the
//! cost matrix. The semantics follow this crate's primal form: minimize
//! ⟨C,X⟩ subject to ⟨A_k,X⟩ = b_k, X ⪰ 0.
//!
//! Trace-bound annotations are not part of the format; imported blocks get
//! an unknown (infinite) bound.

use std::collections::BTreeMap;

use super::problem::{Block, Constraint, MatEntry, SdpError, SdpProblem};

fn fmt_f64(v: f64) -> String {
    format!("{:.17e}", v)
}

/// Deterministic textual export: entries sorted by (constraint, block, row,
/// column); byte-stable across runs and across an import round trip.
pub fn export_sdpa(problem: &SdpProblem) -> String {
    let mut s = String::new();
    s.push_str("* block-diagonal SDP, primal equality form\n");
    s.push_str(&format!("{}\n", problem.constraints.len()));
    s.push_str(&format!("{}\n", problem.blocks.len()));
    let sizes: Vec<String> = problem
        .blocks
        .iter()
        .map(|b| {
            if b.diagonal {
                format!("-{}", b.size)
            } else {
                format!("{}", b.size)
            }
        })
        .collect();
    s.push_str(&sizes.join(" "));
    s.push('\n');
    let rhs: Vec<String> = problem.constraints.iter().map(|c| fmt_f64(c.rhs)).collect();
    s.push_str(&rhs.join(" "));
    s.push('\n');

    let mut all: BTreeMap<(usize, usize, usize, usize), f64> = BTreeMap::new();
    for e in &problem.objective {
        all.insert((0, e.block, e.row, e.col), e.value);
    }
    for (k, con) in problem.constraints.iter().enumerate() {
        for e in &con.entries {
            all.insert((k + 1, e.block, e.row, e.col), e.value);
        }
    }
    for ((k, b, i, j), v) in all {
        s.push_str(&format!(
            "{} {} {} {} {}\n",
            k,
            b + 1,
            i + 1,
            j + 1,
            fmt_f64(v)
        ));
    }
    s
}

fn parse_err(line: usize, msg: impl Into<String>) -> SdpError {
    SdpError::Parse {
        line,
        msg: msg.into(),
    }
}

/// Parse the interchange format; tolerates both comment styles and the
/// customary decorations `(){},` on the size and right-hand-side lines.
pub fn import_sdpa(text: &str) -> Result<SdpProblem, SdpError> {
    let mut data_lines: Vec<(usize, &str)> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('*') || line.starts_with('"') {
            continue;
        }
        data_lines.push((idx + 1, line));
    }
    if data_lines.len() < 4 {
        return Err(parse_err(
            text.lines().count(),
            "expected constraint count, block count, sizes and right-hand sides",
        ));
    }
    let clean = |s: &str| -> String {
        s.chars()
            .map(|c| if "(){},".contains(c) { ' ' } else { c })
            .collect()
    };

    let (l0, s0) = data_lines[0];
    let m: usize = clean(s0)
        .split_whitespace()
        .next()
        .ok_or_else(|| parse_err(l0, "missing constraint count"))?
        .parse()
        .map_err(|_| parse_err(l0, "bad constraint count"))?;
    let (l1, s1) = data_lines[1];
    let nblock: usize = clean(s1)
        .split_whitespace()
        .next()
        .ok_or_else(|| parse_err(l1, "missing block count"))?
        .parse()
        .map_err(|_| parse_err(l1, "bad block count"))?;

    let (l2, s2) = data_lines[2];
    let sizes: Vec<i64> = clean(s2)
        .split_whitespace()
        .map(|t| t.parse::<i64>().map_err(|_| parse_err(l2, format!("bad block size `{}`", t))))
        .collect::<Result<_, _>>()?;
    if sizes.len() != nblock {
        return Err(parse_err(
            l2,
            format!("expected {} block sizes, found {}", nblock, sizes.len()),
        ));
    }
    let blocks: Vec<Block> = sizes
        .iter()
        .map(|&s| Block {
            size: s.unsigned_abs() as usize,
            diagonal: s < 0,
            trace_bound: f64::INFINITY,
        })
        .collect();

    let (l3, s3) = data_lines[3];
    let rhs: Vec<f64> = clean(s3)
        .split_whitespace()
        .map(|t| t.parse::<f64>().map_err(|_| parse_err(l3, format!("bad right-hand side `{}`", t))))
        .collect::<Result<_, _>>()?;
    if rhs.len() != m {
        return Err(parse_err(
            l3,
            format!("expected {} right-hand sides, found {}", m, rhs.len()),
        ));
    }

    let mut objective: Vec<MatEntry> = Vec::new();
    let mut constraints: Vec<Constraint> = rhs
        .into_iter()
        .map(|r| Constraint {
            entries: vec![],
            rhs: r,
        })
        .collect();
    let mut seen = std::collections::BTreeSet::new();

    for &(lineno, line) in &data_lines[4..] {
        let toks: Vec<&str> = line.split_whitespace().collect();
        if toks.len() != 5 {
            return Err(parse_err(lineno, format!("expected 5 fields, found {}", toks.len())));
        }
        let k: usize = toks[0]
            .parse()
            .map_err(|_| parse_err(lineno, "bad matrix index"))?;
        let b: usize = toks[1]
            .parse()
            .map_err(|_| parse_err(lineno, "bad block index"))?;
        let i: usize = toks[2]
            .parse()
            .map_err(|_| parse_err(lineno, "bad row index"))?;
        let j: usize = toks[3]
            .parse()
            .map_err(|_| parse_err(lineno, "bad column index"))?;
        let v: f64 = toks[4]
            .parse()
            .map_err(|_| parse_err(lineno, "bad value"))?;
        if k > m {
            return Err(parse_err(lineno, format!("matrix index {} out of range", k)));
        }
        if b == 0 || b > nblock {
            return Err(parse_err(lineno, format!("block index {} out of range", b)));
        }
        let size = blocks[b - 1].size;
        if i == 0 || j == 0 || i > size || j > size {
            return Err(parse_err(lineno, format!("entry ({},{}) out of range", i, j)));
        }
        if i > j {
            return Err(parse_err(lineno, "lower-triangle entry; store the upper triangle"));
        }
        if blocks[b - 1].diagonal && i != j {
            return Err(parse_err(lineno, "off-diagonal entry in a diagonal block"));
        }
        if !seen.insert((k, b, i, j)) {
            return Err(parse_err(lineno, format!("duplicate entry {} {} {} {}", k, b, i, j)));
        }
        let entry = MatEntry {
            block: b - 1,
            row: i - 1,
            col: j - 1,
            value: v,
        };
        if k == 0 {
            objective.push(entry);
        } else {
            constraints[k - 1].entries.push(entry);
        }
    }

    let problem = SdpProblem {
        blocks,
        constraints,
        objective,
    };
    problem.validate()?;
    Ok(problem)
}
