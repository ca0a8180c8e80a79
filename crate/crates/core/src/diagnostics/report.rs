use std::io::Write;

use serde::Serialize;

use crate::Result;

pub const CSV_HEADER: &str = "estimator,level,parameter,value,estimate,std_error,paths,pass";

/// One `(level, parameter)` cell of a study.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportRow {
    pub level: usize,
    pub parameter: String,
    pub value: f64,
    pub estimate: f64,
    pub std_error: f64,
    pub paths: usize,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EstimateReport {
    pub estimator: String,
    pub estimate: f64,
    pub std_error: f64,
    /// Paths that entered the estimate, per cell.
    pub paths: usize,
    pub blowups: usize,
    /// The finite level list standing in for "all n".
    pub levels: Vec<usize>,
    pub rows: Vec<ReportRow>,
    pub pass: bool,
    /// Distance to failure in the units of the contract; negative when failing.
    pub margin: f64,
    pub extra: serde_json::Value,
    pub config: serde_json::Value,
}

impl EstimateReport {
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "{CSV_HEADER}")?;
        for r in &self.rows {
            writeln!(
                w,
                "{},{},{},{},{},{},{},{}",
                self.estimator, r.level, r.parameter, r.value, r.estimate, r.std_error, r.paths, r.pass
            )?;
        }
        Ok(())
    }

    pub fn to_csv(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("CSV is ASCII")
    }

    /// Pretty JSON; floats use the shortest representation that round-trips.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report is serialisable")
    }

    /// Rows of one level, in insertion order.
    pub fn rows_for(&self, level: usize) -> impl Iterator<Item = &ReportRow> {
        self.rows.iter().filter(move |r| r.level == level)
    }

    pub fn row(&self, level: usize, value: f64) -> Option<&ReportRow> {
        self.rows.iter().find(|r| r.level == level && r.value == value)
    }
}
