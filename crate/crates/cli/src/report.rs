//! Machine-readable run output: CSV with a `#` metadata header, or the same
//! content as JSON.

use std::io::Write;

use anyhow::Result;
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    Input,
    ClosedForm,
    Quadrature,
    Eigensolver,
    /// Arithmetic on other computed values.
    Derived,
    /// Given per row in the `provenance` column.
    Row,
}

impl Provenance {
    pub fn tag(self) -> &'static str {
        match self {
            Provenance::Input => "input",
            Provenance::ClosedForm => "closed-form",
            Provenance::Quadrature => "quadrature",
            Provenance::Eigensolver => "eigensolver",
            Provenance::Derived => "derived",
            Provenance::Row => "row",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Cell {
    Num(f64),
    Int(i64),
    Text(String),
}

/// Shortest round-trip form, in exponent notation outside [1e-3, 1e6).
pub fn num(v: f64) -> String {
    let a = v.abs();
    if a == 0.0 || (1e-3..1e6).contains(&a) || !v.is_finite() {
        v.to_string()
    } else {
        format!("{v:e}")
    }
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Num(v) => num(*v),
            Cell::Int(v) => v.to_string(),
            Cell::Text(s) => s.clone(),
        }
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Column {
    pub name: String,
    pub provenance: Provenance,
}

#[derive(Debug, Clone, Serialize)]
pub struct SummaryEntry {
    pub name: String,
    pub value: Cell,
    pub provenance: Provenance,
}

#[derive(Debug, Clone, Serialize)]
pub struct Assertion {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub seed: u64,
    #[serde(serialize_with = "ordered_map")]
    pub params: Vec<(String, String)>,
    pub columns: Vec<Column>,
    pub rows: Vec<Vec<Cell>>,
    pub summary: Vec<SummaryEntry>,
    pub assertions: Vec<Assertion>,
}

fn ordered_map<S: serde::Serializer>(pairs: &[(String, String)], s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_map(pairs.iter().map(|(k, v)| (k, v)))
}

impl Report {
    pub fn new(command: &str, seed: u64) -> Self {
        Report {
            tool: "opineq",
            version: env!("CARGO_PKG_VERSION"),
            command: command.to_string(),
            seed,
            params: Vec::new(),
            columns: Vec::new(),
            rows: Vec::new(),
            summary: Vec::new(),
            assertions: Vec::new(),
        }
    }

    pub fn param(&mut self, name: &str, value: impl ToString) -> &mut Self {
        self.params.push((name.to_string(), value.to_string()));
        self
    }

    pub fn columns(&mut self, cols: &[(&str, Provenance)]) -> &mut Self {
        self.columns = cols.iter().map(|(n, p)| Column { name: n.to_string(), provenance: *p }).collect();
        self
    }

    pub fn row(&mut self, cells: Vec<Cell>) {
        debug_assert_eq!(cells.len(), self.columns.len());
        self.rows.push(cells);
    }

    pub fn summary(&mut self, name: &str, value: impl Into<Cell>, provenance: Provenance) {
        self.summary.push(SummaryEntry { name: name.to_string(), value: value.into(), provenance });
    }

    pub fn check(&mut self, name: &str, passed: bool, detail: impl Into<String>) {
        self.assertions.push(Assertion { name: name.to_string(), passed, detail: detail.into() });
    }

    pub fn failed(&self) -> Vec<&str> {
        self.assertions.iter().filter(|a| !a.passed).map(|a| a.name.as_str()).collect()
    }

    pub fn write(&self, format: Format, out: &mut dyn Write) -> Result<()> {
        match format {
            Format::Json => {
                serde_json::to_writer_pretty(&mut *out, self)?;
                writeln!(out)?;
            }
            Format::Csv => self.write_csv(out)?,
        }
        Ok(())
    }

    fn write_csv(&self, out: &mut dyn Write) -> Result<()> {
        writeln!(out, "# {} {}", self.tool, self.version)?;
        writeln!(out, "# command: {}", self.command)?;
        writeln!(out, "# seed: {}", self.seed)?;
        for (k, v) in &self.params {
            writeln!(out, "# param {k}={v}")?;
        }
        let prov: Vec<String> = self.columns.iter().map(|c| format!("{}={}", c.name, c.provenance.tag())).collect();
        writeln!(out, "# provenance {}", prov.join(" "))?;
        for s in &self.summary {
            writeln!(out, "# summary {}={} [{}]", s.name, s.value.render(), s.provenance.tag())?;
        }
        for a in &self.assertions {
            writeln!(out, "# assert {}={} {}", a.name, if a.passed { "pass" } else { "fail" }, a.detail)?;
        }
        let mut w = csv::Writer::from_writer(out);
        w.write_record(self.columns.iter().map(|c| c.name.as_str()))?;
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::render))?;
        }
        w.flush()?;
        Ok(())
    }
}
