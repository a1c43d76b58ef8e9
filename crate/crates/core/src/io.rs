//! CSV artifacts.
//!
//! Every writer here is paired with a reader, and the pair is exact: numbers are
//! printed in the scalar's shortest round-trip form, so `read(write(x)) == x`
//! bitwise. That is a hard requirement, not a nicety — downstream tooling recomputes
//! terminal payments from re-parsed solution files, and any formatting loss there
//! would show up as a phantom payment discrepancy.
//!
//! Layouts, one row per grid node unless said otherwise:
//!
//! * solution: `t, pi_0.., y_0.., alpha_0..` — the planned-equilibrium triple.
//! * anarchy: `t, pi_0.., v_0.., alpha_0..` — same shape, value function instead
//!   of adjoint.
//! * exposure table: `t, z_0..` — the per-state off-state credits.
//! * realizations: one row per simulated path: `path, initial_state, jumps,
//!   terminal_payment, agent_cost, principal_cost`, with jumps encoded
//!   `time@state` separated by `;` (empty field for a jumpless path).
//! * series: caller-labelled columns, for report tables like comparison runs.

use std::path::Path;

use crate::contract::{ContractRealization, ZTable};
use crate::error::{Error, Result};
use crate::markov::{CTMCPath, ProbabilityVector, TimeGrid};
use crate::scalar::Scalar;

fn parse_cell<S: Scalar>(what: &'static str, row: usize, text: &str) -> Result<S> {
    S::parse_str(text.trim()).ok_or_else(|| Error::MalformedArtifact {
        what,
        detail: format!("row {row}: cannot parse number from {text:?}"),
    })
}

fn fmt<S: Scalar>(x: S) -> String {
    format!("{x}")
}

// ─── Generic labelled series ─────────────────────────────────────────────────────────

/// Writes labelled columns of equal length. The workhorse behind the report tables;
/// the typed artifacts below add structure on top of it.
pub fn write_series_csv<S: Scalar>(
    path: impl AsRef<Path>,
    headers: &[&str],
    columns: &[&[S]],
) -> Result<()> {
    assert_eq!(headers.len(), columns.len(), "one header per column");
    let rows = columns.first().map_or(0, |c| c.len());
    assert!(
        columns.iter().all(|c| c.len() == rows),
        "ragged columns cannot form a table"
    );
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(headers)?;
    for r in 0..rows {
        w.write_record(columns.iter().map(|c| fmt(c[r])))?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a labelled-series file back as `(headers, columns)`.
pub fn read_series_csv<S: Scalar>(path: impl AsRef<Path>) -> Result<(Vec<String>, Vec<Vec<S>>)> {
    let mut r = csv::Reader::from_path(path)?;
    let headers: Vec<String> = r.headers()?.iter().map(str::to_owned).collect();
    let mut columns: Vec<Vec<S>> = vec![Vec::new(); headers.len()];
    for (idx, record) in r.records().enumerate() {
        let record = record?;
        if record.len() != headers.len() {
            return Err(Error::MalformedArtifact {
                what: "series csv",
                detail: format!(
                    "row {idx}: {} fields under {} headers",
                    record.len(),
                    headers.len()
                ),
            });
        }
        for (col, cell) in columns.iter_mut().zip(record.iter()) {
            col.push(parse_cell("series csv", idx, cell)?);
        }
    }
    Ok((headers, columns))
}

// ─── Node-flow artifacts (solution / anarchy) ────────────────────────────────────────

/// A re-read node-flow artifact: the grid plus the three per-node blocks. The middle
/// block is the adjoint for solution files and the value function for anarchy files.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowArtifact<S: Scalar> {
    /// Grid reconstructed from the time column (uniform spacing is checked).
    pub grid: TimeGrid<S>,
    /// Population flow at the nodes.
    pub pi: Vec<ProbabilityVector<S>>,
    /// Adjoint (`y_*`) or value (`v_*`) block, depending on the file.
    pub dual: Vec<Vec<S>>,
    /// Control block.
    pub control: Vec<Vec<S>>,
}

fn block_headers(prefix: &str, m: usize) -> Vec<String> {
    (0..m).map(|i| format!("{prefix}_{i}")).collect()
}

fn write_flow_csv<S: Scalar>(
    path: impl AsRef<Path>,
    dual_prefix: &str,
    grid: &TimeGrid<S>,
    pi: &[ProbabilityVector<S>],
    dual: &[Vec<S>],
    control: &[Vec<S>],
) -> Result<()> {
    let m = pi.first().map_or(0, |p| p.len());
    let mut w = csv::Writer::from_path(path)?;
    let mut headers = vec!["t".to_owned()];
    headers.extend(block_headers("pi", m));
    headers.extend(block_headers(dual_prefix, m));
    headers.extend(block_headers("alpha", m));
    w.write_record(&headers)?;
    for k in 0..grid.n_nodes() {
        let mut row = vec![fmt(grid.node(k))];
        row.extend(pi[k].iter().map(|&x| fmt(x)));
        row.extend(dual[k].iter().map(|&x| fmt(x)));
        row.extend(control[k].iter().map(|&x| fmt(x)));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

fn read_flow_csv<S: Scalar>(path: impl AsRef<Path>, dual_prefix: &str) -> Result<FlowArtifact<S>> {
    let (headers, columns) = read_series_csv::<S>(path)?;
    let bad = |detail: String| Error::MalformedArtifact {
        what: "flow csv",
        detail,
    };
    if headers.len() < 4 || headers.len() % 3 != 1 || headers[0] != "t" {
        return Err(bad(format!("unexpected header shape {headers:?}")));
    }
    let m = (headers.len() - 1) / 3;
    let expect: Vec<String> = ["pi", dual_prefix, "alpha"]
        .iter()
        .flat_map(|p| block_headers(p, m))
        .collect();
    if headers[1..] != expect[..] {
        return Err(bad(format!("unexpected column labels {headers:?}")));
    }
    let n_nodes = columns[0].len();
    if n_nodes < 2 {
        return Err(bad(format!("{n_nodes} rows cannot span a grid")));
    }
    let grid = TimeGrid::new(columns[0][0], columns[0][n_nodes - 1], n_nodes - 1)?;
    for (k, &t) in columns[0].iter().enumerate() {
        if t != grid.node(k) {
            return Err(bad(format!(
                "time column is not the uniform grid at row {k}: {t} vs {}",
                grid.node(k)
            )));
        }
    }

    let gather = |offset: usize| -> Vec<Vec<S>> {
        (0..n_nodes)
            .map(|k| (0..m).map(|i| columns[1 + offset + i][k]).collect())
            .collect()
    };
    let pi = gather(0)
        .into_iter()
        .map(ProbabilityVector::new)
        .collect::<Result<Vec<_>>>()?;
    Ok(FlowArtifact {
        grid,
        pi,
        dual: gather(m),
        control: gather(2 * m),
    })
}

/// Writes a planned-equilibrium flow (`t, pi_*, y_*, alpha_*`).
pub fn write_solution_csv<S: Scalar>(
    path: impl AsRef<Path>,
    grid: &TimeGrid<S>,
    pi: &[ProbabilityVector<S>],
    y: &[Vec<S>],
    control: &[Vec<S>],
) -> Result<()> {
    write_flow_csv(path, "y", grid, pi, y, control)
}

/// Reads a planned-equilibrium flow back, exactly.
pub fn read_solution_csv<S: Scalar>(path: impl AsRef<Path>) -> Result<FlowArtifact<S>> {
    read_flow_csv(path, "y")
}

/// Writes an anarchy flow (`t, pi_*, v_*, alpha_*`).
pub fn write_anarchy_csv<S: Scalar>(
    path: impl AsRef<Path>,
    grid: &TimeGrid<S>,
    pi: &[ProbabilityVector<S>],
    value: &[Vec<S>],
    control: &[Vec<S>],
) -> Result<()> {
    write_flow_csv(path, "v", grid, pi, value, control)
}

/// Reads an anarchy flow back, exactly.
pub fn read_anarchy_csv<S: Scalar>(path: impl AsRef<Path>) -> Result<FlowArtifact<S>> {
    read_flow_csv(path, "v")
}

// ─── Exposure table ──────────────────────────────────────────────────────────────────

/// Writes an exposure table (`t, z_0..`).
pub fn write_ztable_csv<S: Scalar>(path: impl AsRef<Path>, table: &ZTable<S>) -> Result<()> {
    let m = table.values.first().map_or(0, Vec::len);
    let mut w = csv::Writer::from_path(path)?;
    let mut headers = vec!["t".to_owned()];
    headers.extend(block_headers("z", m));
    w.write_record(&headers)?;
    for (k, row) in table.values.iter().enumerate() {
        let mut record = vec![fmt(table.grid.node(k))];
        record.extend(row.iter().map(|&x| fmt(x)));
        w.write_record(&record)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads an exposure table back, exactly.
pub fn read_ztable_csv<S: Scalar>(path: impl AsRef<Path>) -> Result<ZTable<S>> {
    let (headers, columns) = read_series_csv::<S>(path)?;
    let bad = |detail: String| Error::MalformedArtifact {
        what: "exposure table csv",
        detail,
    };
    let m = headers.len().saturating_sub(1);
    if m == 0 || headers[0] != "t" || headers[1..] != block_headers("z", m)[..] {
        return Err(bad(format!("unexpected header shape {headers:?}")));
    }
    let n_nodes = columns[0].len();
    if n_nodes < 2 {
        return Err(bad(format!("{n_nodes} rows cannot span a grid")));
    }
    let grid = TimeGrid::new(columns[0][0], columns[0][n_nodes - 1], n_nodes - 1)?;
    let values = (0..n_nodes)
        .map(|k| (0..m).map(|i| columns[1 + i][k]).collect())
        .collect();
    Ok(ZTable { grid, values })
}

// ─── Path realizations ───────────────────────────────────────────────────────────────

fn encode_jumps<S: Scalar>(path: &CTMCPath<S>) -> String {
    path.jumps
        .iter()
        .map(|&(t, s)| format!("{t}@{s}"))
        .collect::<Vec<_>>()
        .join(";")
}

fn decode_jumps<S: Scalar>(row: usize, text: &str) -> Result<Vec<(S, usize)>> {
    if text.is_empty() {
        return Ok(Vec::new());
    }
    text.split(';')
        .map(|item| {
            let (t, s) = item.split_once('@').ok_or_else(|| Error::MalformedArtifact {
                what: "realizations csv",
                detail: format!("row {row}: jump entry {item:?} is not time@state"),
            })?;
            Ok((
                parse_cell("realizations csv", row, t)?,
                s.parse().map_err(|_| Error::MalformedArtifact {
                    what: "realizations csv",
                    detail: format!("row {row}: bad state index {s:?}"),
                })?,
            ))
        })
        .collect()
}

/// Writes contract realizations, one row per simulated path.
pub fn write_realizations_csv<S: Scalar>(
    path: impl AsRef<Path>,
    horizon: S,
    realizations: &[ContractRealization<S>],
) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record([
        "path",
        "initial_state",
        "horizon",
        "jumps",
        "terminal_payment",
        "agent_cost",
        "principal_cost",
    ])?;
    for (k, r) in realizations.iter().enumerate() {
        debug_assert!(r.path.horizon == horizon);
        w.write_record([
            k.to_string(),
            r.path.initial_state.to_string(),
            fmt(r.path.horizon),
            encode_jumps(&r.path),
            fmt(r.terminal_payment),
            fmt(r.agent_cost),
            fmt(r.principal_cost),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Reads contract realizations back, exactly.
pub fn read_realizations_csv<S: Scalar>(
    path: impl AsRef<Path>,
) -> Result<Vec<ContractRealization<S>>> {
    let mut r = csv::Reader::from_path(path)?;
    let bad = |detail: String| Error::MalformedArtifact {
        what: "realizations csv",
        detail,
    };
    let headers: Vec<String> = r.headers()?.iter().map(str::to_owned).collect();
    let expect = [
        "path",
        "initial_state",
        "horizon",
        "jumps",
        "terminal_payment",
        "agent_cost",
        "principal_cost",
    ];
    if headers != expect {
        return Err(bad(format!("unexpected header shape {headers:?}")));
    }
    let mut out = Vec::new();
    for (row, record) in r.records().enumerate() {
        let record = record?;
        if record.len() != expect.len() {
            return Err(bad(format!("row {row}: wrong field count {}", record.len())));
        }
        let initial_state = record[1].parse().map_err(|_| {
            bad(format!("row {row}: bad initial state {:?}", &record[1]))
        })?;
        out.push(ContractRealization {
            path: CTMCPath {
                initial_state,
                jumps: decode_jumps(row, &record[3])?,
                horizon: parse_cell("realizations csv", row, &record[2])?,
            },
            terminal_payment: parse_cell("realizations csv", row, &record[4])?,
            agent_cost: parse_cell("realizations csv", row, &record[5])?,
            principal_cost: parse_cell("realizations csv", row, &record[6])?,
        });
    }
    Ok(out)
}
