//! Self-describing CSV tables and the plot scripts that read them.
//!
//! A table file starts with `#` lines holding `key = value` metadata, then a
//! header row, then data rows. Numbers use the shortest representation that
//! parses back to the same `f64`; infinities are written `+inf` / `-inf`.

use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use exlab::typespace::{format_value, parse_value};

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Text(String),
}

impl Cell {
    pub fn num(&self) -> Option<f64> {
        match self {
            Cell::Num(v) => Some(*v),
            Cell::Text(_) => None,
        }
    }

    fn render(&self) -> String {
        match self {
            Cell::Num(v) if v.is_nan() => "na".to_string(),
            Cell::Num(v) => format_value(*v),
            Cell::Text(s) => s.clone(),
        }
    }

    fn parse(s: &str) -> Cell {
        match parse_value(s) {
            Ok(v) => Cell::Num(v),
            Err(_) => Cell::Text(s.to_string()),
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
        Cell::Num(v as f64)
    }
}

impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Cell::Num(v as f64)
    }
}

impl From<String> for Cell {
    fn from(s: String) -> Self {
        Cell::Text(s)
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Text(s.to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    pub meta: Vec<(String, String)>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Self { meta: Vec::new(), columns: columns.iter().map(|c| c.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push_meta(&mut self, key: impl Into<String>, value: impl Into<String>) {
        self.meta.push((key.into(), value.into()));
    }

    pub fn meta(&self, key: &str) -> Option<&str> {
        self.meta.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    /// Numeric values of one column; text cells are skipped.
    pub fn values(&self, name: &str) -> Vec<f64> {
        match self.column(name) {
            Some(j) => self.rows.iter().filter_map(|r| r[j].num()).collect(),
            None => Vec::new(),
        }
    }

    /// Multiply the named numeric columns by `factor`.
    pub fn scale_columns(&mut self, names: &[&str], factor: f64) {
        let idx: Vec<usize> = names.iter().filter_map(|n| self.column(n)).collect();
        for row in &mut self.rows {
            for &j in &idx {
                if let Cell::Num(v) = &mut row[j] {
                    *v *= factor;
                }
            }
        }
    }

    pub fn write_to(&self, mut w: impl Write) -> Result<()> {
        for (k, v) in &self.meta {
            writeln!(w, "# {k} = {v}")?;
        }
        let mut csv = csv::Writer::from_writer(w);
        csv.write_record(&self.columns)?;
        for row in &self.rows {
            csv.write_record(row.iter().map(Cell::render))?;
        }
        csv.flush()?;
        Ok(())
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut buf = Vec::new();
        self.write_to(&mut buf)?;
        Ok(buf)
    }

    pub fn write_file(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_bytes()?).with_context(|| format!("writing {}", path.display()))
    }

    pub fn read_from(r: impl Read) -> Result<Self> {
        let mut text = String::new();
        BufReader::new(r).read_to_string(&mut text)?;
        let mut meta = Vec::new();
        let mut body_start = 0;
        for line in text.as_bytes().lines() {
            let line = line?;
            let Some(rest) = line.strip_prefix('#') else { break };
            body_start += line.len() + 1;
            let (k, v) = rest.split_once(" = ").ok_or_else(|| anyhow!("malformed header line {line:?}"))?;
            meta.push((k.trim().to_string(), v.to_string()));
        }
        let body = text.get(body_start.min(text.len())..).unwrap_or("");
        let mut csv = csv::ReaderBuilder::new().has_headers(true).from_reader(body.as_bytes());
        let columns: Vec<String> = csv.headers()?.iter().map(str::to_string).collect();
        let mut rows = Vec::new();
        for (i, rec) in csv.records().enumerate() {
            let rec = rec.with_context(|| format!("data row {}", i + 1))?;
            if rec.len() != columns.len() {
                bail!("data row {} has {} fields, header has {}", i + 1, rec.len(), columns.len());
            }
            rows.push(rec.iter().map(Cell::parse).collect());
        }
        Ok(Self { meta, columns, rows })
    }

    pub fn read_file(path: &Path) -> Result<Self> {
        let f = std::fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
        Self::read_from(f).with_context(|| format!("reading {}", path.display()))
    }
}

/// One curve of a plot script.
pub struct Series<'a> {
    pub column: &'a str,
    pub title: &'a str,
}

/// What a plot script draws.
pub struct Plot<'a> {
    pub csv_name: &'a str,
    pub image_name: &'a str,
    pub title: &'a str,
    pub x: &'a str,
    pub x_label: &'a str,
    pub y_label: &'a str,
    pub series: &'a [Series<'a>],
}

/// Gnuplot script for `plot`. It refers to the data only by file name and
/// column names, so it works wherever the two files sit side by side.
pub fn plot_script(table: &Table, plot: &Plot) -> Result<String> {
    let Plot { csv_name, image_name, title, x, x_label, y_label, series } = *plot;
    for c in std::iter::once(x).chain(series.iter().map(|s| s.column)) {
        if table.column(c).is_none() {
            bail!("plot column {c:?} is not in the table");
        }
    }
    let mut s = String::new();
    if let Some(v) = table.meta("tool") {
        s.push_str(&format!("# {v}\n"));
    }
    s.push_str(&format!("# data: {csv_name}\n"));
    s.push_str("set datafile separator \",\"\n");
    s.push_str("set datafile missing \"+inf\"\n");
    s.push_str("set terminal pngcairo size 800,600\n");
    s.push_str(&format!("set output \"{image_name}\"\n"));
    s.push_str(&format!("set title \"{title}\"\n"));
    s.push_str(&format!("set xlabel \"{x_label}\"\n"));
    s.push_str(&format!("set ylabel \"{y_label}\"\n"));
    s.push_str("set key top right\n");
    s.push_str("set grid\n");
    let plots: Vec<String> = series
        .iter()
        .map(|p| format!("\"{csv_name}\" using \"{x}\":\"{}\" with linespoints title \"{}\"", p.column, p.title))
        .collect();
    s.push_str(&format!("plot {}\n", plots.join(", \\\n     ")));
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let mut t = Table::new(&["rate", "value", "branch"]);
        t.push_meta("tool", "exlab 0.1.0");
        t.push_meta("channel", "0.9 0.1; 0.2 0.8");
        t.push(vec![0.1.into(), f64::INFINITY.into(), "A".into()]);
        t.push(vec![(1.0f64 / 3.0).into(), f64::NEG_INFINITY.into(), "h*(R=0.2,E=0.1)".into()]);
        t.push(vec![0.0.into(), 1e-300.into(), "B".into()]);
        let bytes = t.to_bytes().unwrap();
        let text = String::from_utf8(bytes.clone()).unwrap();
        assert!(text.contains("+inf") && text.contains("-inf"));
        let back = Table::read_from(bytes.as_slice()).unwrap();
        assert_eq!(back, t);
    }

    #[test]
    fn script_checks_columns() {
        let t = Table::new(&["rate", "y"]);
        let s = [Series { column: "y", title: "y" }];
        let mut p = Plot { csv_name: "a.csv", image_name: "a.png", title: "t", x: "rate", x_label: "x", y_label: "y", series: &s };
        assert!(plot_script(&t, &p).is_ok());
        let bad = [Series { column: "z", title: "z" }];
        p.series = &bad;
        assert!(plot_script(&t, &p).is_err());
    }
}
