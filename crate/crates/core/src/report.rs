//! CSV tables and markdown summaries. Numbers are written in Rust's shortest
//! round-trip form, so identical inputs give byte-identical files.

use std::fmt::Write as _;
use std::path::Path;

/// A CSV table whose cells are already formatted.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Table {
    pub headers: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(headers: impl IntoIterator<Item = impl Into<String>>) -> Self {
        Table { headers: headers.into_iter().map(Into::into).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.headers.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.headers).expect("in-memory write");
        for row in &self.rows {
            w.write_record(row).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("cells are UTF-8")
    }

    /// Markdown rendering for summaries.
    pub fn to_markdown(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "| {} |", self.headers.join(" | "));
        let _ = writeln!(s, "|{}", "---|".repeat(self.headers.len()));
        for row in &self.rows {
            let _ = writeln!(s, "| {} |", row.join(" | "));
        }
        s
    }
}

/// A finite number, or an empty cell when the value is missing.
pub fn num(x: Option<f64>) -> String {
    match x {
        Some(v) if v == 0.0 || (1e-4..1e15).contains(&v.abs()) => format!("{v}"),
        Some(v) if v.is_finite() => format!("{v:e}"),
        Some(v) if v == f64::INFINITY => "inf".into(),
        Some(v) if v == f64::NEG_INFINITY => "-inf".into(),
        _ => String::new(),
    }
}

pub fn f(x: f64) -> String {
    num(Some(x))
}

/// Output of one command: named CSV tables plus a markdown summary.
#[derive(Debug, Clone, Default)]
pub struct Report {
    pub tables: Vec<(String, Table)>,
    pub summary: String,
}

impl Report {
    /// Writes `<name>.csv` for each table and `summary.md` into `dir`.
    pub fn write(&self, dir: &Path) -> std::io::Result<()> {
        std::fs::create_dir_all(dir)?;
        for (name, table) in &self.tables {
            std::fs::write(dir.join(format!("{name}.csv")), table.to_csv())?;
        }
        std::fs::write(dir.join("summary.md"), &self.summary)
    }
}
