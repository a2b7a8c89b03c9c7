use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};

/// A 2x2 participation-by-instrument count table with its printed margins.
///
/// File layout (headed CSV):
///
/// ```text
/// participation,z0,z1,total
/// 0,3047,2118,5165
/// 1,43,4015,4058
/// total,3090,6133,9223
/// ```
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct CountsTable {
    /// `cells[d][z]`.
    pub cells: [[u64; 2]; 2],
    /// Printed totals per participation row.
    pub row_totals: [u64; 2],
    /// Printed totals per instrument column.
    pub column_totals: [u64; 2],
    pub total: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MarginCheck {
    pub margin: String,
    pub printed: u64,
    pub computed: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ValidationReport {
    pub schema_version: u32,
    pub table: CountsTable,
    pub checks: Vec<MarginCheck>,
    pub pass: bool,
}

impl CountsTable {
    pub fn check(&self) -> ValidationReport {
        let c = &self.cells;
        let mut checks = vec![];
        for d in 0..2 {
            checks.push(MarginCheck {
                margin: format!("row participation={d}"),
                printed: self.row_totals[d],
                computed: c[d][0] + c[d][1],
            });
        }
        for z in 0..2 {
            checks.push(MarginCheck {
                margin: format!("column z{z}"),
                printed: self.column_totals[z],
                computed: c[0][z] + c[1][z],
            });
        }
        checks.push(MarginCheck {
            margin: "grand total".into(),
            printed: self.total,
            computed: c.iter().flatten().sum(),
        });
        let pass = checks.iter().all(|m| m.printed == m.computed);
        ValidationReport { schema_version: super::config::SCHEMA_VERSION, table: *self, checks, pass }
    }

    pub fn parse(text: &str, origin: &str) -> Result<CountsTable> {
        let bad = |m: String| Error::Data(format!("{origin}: {m}"));
        let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(text.as_bytes());
        let headers = rdr.headers().map_err(|e| bad(e.to_string()))?.clone();
        let names: Vec<&str> = headers.iter().map(str::trim).collect();
        if names != ["participation", "z0", "z1", "total"] {
            return Err(bad(format!("expected header participation,z0,z1,total, got {}", names.join(","))));
        }
        let mut rows: [Option<[u64; 3]>; 3] = [None; 3];
        for rec in rdr.records() {
            let rec = rec.map_err(|e| bad(e.to_string()))?;
            let label = rec.get(0).unwrap_or("").trim();
            let slot = match label {
                "0" => 0,
                "1" => 1,
                "total" => 2,
                other => return Err(bad(format!("unknown row label `{other}`"))),
            };
            if rows[slot].is_some() {
                return Err(bad(format!("row `{label}` appears twice")));
            }
            let mut v = [0u64; 3];
            for (k, out) in v.iter_mut().enumerate() {
                let cell = rec.get(k + 1).unwrap_or("").trim();
                *out = cell
                    .parse()
                    .map_err(|_| bad(format!("row `{label}`: `{cell}` is not a non-negative integer count")))?;
            }
            rows[slot] = Some(v);
        }
        let get = |i: usize, label: &str| rows[i].ok_or_else(|| bad(format!("missing row `{label}`")));
        let (r0, r1, rt) = (get(0, "0")?, get(1, "1")?, get(2, "total")?);
        Ok(CountsTable {
            cells: [[r0[0], r0[1]], [r1[0], r1[1]]],
            row_totals: [r0[2], r1[2]],
            column_totals: [rt[0], rt[1]],
            total: rt[2],
        })
    }
}

/// Checks the margins of a counts file; any mismatch is a data error that
/// names the offending margins.
pub fn cmd_validate(path: &Path) -> Result<ValidationReport> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let report = CountsTable::parse(&text, &path.display().to_string())?.check();
    if !report.pass {
        let bad: Vec<String> = report
            .checks
            .iter()
            .filter(|m| m.printed != m.computed)
            .map(|m| format!("{} printed {} but cells sum to {}", m.margin, m.printed, m.computed))
            .collect();
        return Err(Error::Data(format!("{}: margin mismatch: {}", path.display(), bad.join("; "))));
    }
    Ok(report)
}
