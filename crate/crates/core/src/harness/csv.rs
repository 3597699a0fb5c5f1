//! Deterministic CSV output: header row, LF endings, 17 significant digits.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::systems::format_sig17;

/// A cell of a CSV row.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Int(i64),
    Num(f64),
    Text(String),
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

impl From<i32> for Cell {
    fn from(v: i32) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Text(v.to_string())
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

fn render(cell: &Cell) -> String {
    match cell {
        Cell::Int(i) => i.to_string(),
        Cell::Num(v) if v.is_nan() => "nan".into(),
        Cell::Num(v) if v.is_infinite() => if *v > 0.0 { "inf" } else { "-inf" }.into(),
        Cell::Num(v) => format_sig17(*v),
        Cell::Text(s) => s.clone(),
    }
}

#[derive(Debug, Clone)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn render(&self) -> String {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        // writing into a Vec cannot fail
        w.write_record(&self.header).expect("in-memory csv");
        for row in &self.rows {
            w.write_record(row.iter().map(render)).expect("in-memory csv");
        }
        String::from_utf8(w.into_inner().expect("in-memory csv")).expect("csv output is utf-8")
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_atomic(path, self.render().as_bytes())
    }
}

/// Writes through a temporary sibling and renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    let tmp = path.with_extension("tmp~");
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

/// Reshapes a CSV into long `(x, y, series)` triples: the first column is
/// `x` and every other column becomes a series named by its header.
pub fn plot_triples(csv_text: &str) -> Result<String> {
    let bad = |e: csv::Error| Error::InvalidArgument(format!("csv: {e}"));
    let mut rdr = csv::ReaderBuilder::new().from_reader(csv_text.as_bytes());
    let header = rdr.headers().map_err(bad)?.clone();
    if header.len() < 2 {
        return Err(Error::InvalidArgument("csv needs at least two columns".into()));
    }
    let mut out = Table::new(&["x", "y", "series"]);
    for rec in rdr.records() {
        let rec = rec.map_err(bad)?;
        for (name, y) in header.iter().zip(rec.iter()).skip(1) {
            out.push(vec![rec[0].into(), y.into(), name.into()]);
        }
    }
    Ok(out.render())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn renders_seventeen_digits() {
        let mut t = Table::new(&["m", "value", "tag"]);
        t.push(vec![3usize.into(), 0.1.into(), "a,b".into()]);
        assert_eq!(t.render(), "m,value,tag\n3,1.0000000000000001e-1,\"a,b\"\n");
        let back: f64 = "1.0000000000000001e-1".parse().unwrap();
        assert_eq!(back, 0.1);
    }

    #[test]
    fn plot_triples_long_format() {
        let s = plot_triples("m,a,b\n1,2,3\n4,5,6\n").unwrap();
        assert_eq!(s, "x,y,series\n1,2,a\n1,3,b\n4,5,a\n4,6,b\n");
        assert!(plot_triples("m\n1\n").is_err());
        assert!(plot_triples("m,a\n1\n").is_err());
    }
}
