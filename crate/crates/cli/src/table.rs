//! CSV tables with a leading schema line, `#g2flow-csv kind=<kind> version=<v>`.

use std::io::{Read, Write};

use crate::error::{CliError, Result};

pub const SCHEMA_VERSION: u32 = 1;
const MAGIC: &str = "#g2flow-csv";

#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub kind: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(kind: &str, header: Vec<String>) -> Self {
        Self {
            kind: kind.into(),
            header,
            rows: Vec::new(),
        }
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }

    /// Parses every entry of column `name` as f64.
    pub fn numeric(&self, name: &str) -> Result<Vec<f64>> {
        let c = self
            .column(name)
            .ok_or_else(|| CliError::Config(format!("no column {name} in {} table", self.kind)))?;
        self.rows
            .iter()
            .map(|r| {
                r[c].parse::<f64>()
                    .map_err(|e| CliError::Config(format!("column {name}: {:?}: {e}", r[c])))
            })
            .collect()
    }

    pub fn write(&self, w: impl Write) -> Result<()> {
        let mut w = w;
        writeln!(w, "{MAGIC} kind={} version={SCHEMA_VERSION}", self.kind).map_err(|e| CliError::Csv(e.into()))?;
        let mut cw = csv::Writer::from_writer(w);
        cw.write_record(&self.header)?;
        for r in &self.rows {
            cw.write_record(r)?;
        }
        cw.flush().map_err(|e| CliError::Csv(e.into()))?;
        Ok(())
    }

    /// Reads a table, rejecting a missing schema line, another kind or an
    /// unknown version.
    pub fn read(r: impl Read, kind: &str) -> Result<Self> {
        let mut text = String::new();
        let mut r = r;
        r.read_to_string(&mut text).map_err(|e| CliError::Csv(e.into()))?;
        let (first, rest) = text.split_once('\n').unwrap_or((text.as_str(), ""));
        let mut parts = first.trim_end().split(' ');
        if parts.next() != Some(MAGIC) {
            return Err(CliError::Config("missing schema line".into()));
        }
        let mut found_kind = None;
        let mut version = None;
        for p in parts {
            match p.split_once('=') {
                Some(("kind", v)) => found_kind = Some(v.to_string()),
                Some(("version", v)) => version = v.parse::<u32>().ok(),
                _ => return Err(CliError::Config(format!("malformed schema field {p:?}"))),
            }
        }
        if found_kind.as_deref() != Some(kind) {
            return Err(CliError::Config(format!(
                "expected a {kind} table, found {found_kind:?}"
            )));
        }
        match version {
            Some(SCHEMA_VERSION) => {}
            other => return Err(CliError::Config(format!("unsupported schema version {other:?}"))),
        }
        let mut cr = csv::Reader::from_reader(rest.as_bytes());
        let header = cr.headers()?.iter().map(String::from).collect();
        let rows = cr
            .records()
            .map(|r| r.map(|rec| rec.iter().map(String::from).collect()))
            .collect::<std::result::Result<_, _>>()?;
        Ok(Self {
            kind: kind.into(),
            header,
            rows,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Table {
        let mut t = Table::new("demo", vec!["a".into(), "b".into()]);
        t.rows.push(vec!["1e-3".into(), "x".into()]);
        t
    }

    #[test]
    fn round_trip() {
        let mut buf = Vec::new();
        sample().write(&mut buf).unwrap();
        assert!(buf.starts_with(b"#g2flow-csv kind=demo version=1\na,b\n"));
        let t = Table::read(buf.as_slice(), "demo").unwrap();
        assert_eq!(t, sample());
        assert_eq!(t.numeric("a").unwrap(), vec![1e-3]);
        assert!(t.numeric("b").is_err());
    }

    #[test]
    fn unknown_version_is_rejected() {
        let text = "#g2flow-csv kind=demo version=2\na,b\n1,2\n";
        assert!(Table::read(text.as_bytes(), "demo").is_err());
        let text = "a,b\n1,2\n";
        assert!(Table::read(text.as_bytes(), "demo").is_err());
    }

    #[test]
    fn wrong_kind_is_rejected() {
        let mut buf = Vec::new();
        sample().write(&mut buf).unwrap();
        assert!(Table::read(buf.as_slice(), "diagnostics").is_err());
    }
}
