//! Columnar text outputs: whitespace-separated, one header line.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::error::Result;
use crate::rde::StateVector;
use crate::setops::{MetricState, PointCloud};

/// States that can be written as a row of coordinates.
pub trait Coordinates {
    fn coordinates(&self) -> Vec<f64>;
}

impl Coordinates for f64 {
    fn coordinates(&self) -> Vec<f64> {
        vec![*self]
    }
}

impl Coordinates for StateVector {
    fn coordinates(&self) -> Vec<f64> {
        self.values().to_vec()
    }
}

/// One row per point: `index c0 c1 …`.
pub fn write_cloud<S: Coordinates + MetricState, W: Write>(cloud: &PointCloud<S>, w: W) -> Result<()> {
    let mut w = BufWriter::new(w);
    let width = cloud.points().first().map_or(0, |p| p.coordinates().len());
    write!(w, "index")?;
    for j in 0..width {
        write!(w, " c{j}")?;
    }
    writeln!(w)?;
    for (i, p) in cloud.points().iter().enumerate() {
        write!(w, "{i}")?;
        for c in p.coordinates() {
            write!(w, " {c:.17e}")?;
        }
        writeln!(w)?;
    }
    w.flush()?;
    Ok(())
}

/// Rows of equal length under the given column names.
pub fn write_table<W: Write>(header: &[&str], rows: &[Vec<f64>], w: W) -> Result<()> {
    let mut w = BufWriter::new(w);
    writeln!(w, "{}", header.join(" "))?;
    for row in rows {
        let line: Vec<String> = row.iter().map(|v| format!("{v:.17e}")).collect();
        writeln!(w, "{}", line.join(" "))?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_cloud_file<S: Coordinates + MetricState>(dir: &Path, name: &str, cloud: &PointCloud<S>) -> Result<()> {
    fs::create_dir_all(dir)?;
    write_cloud(cloud, fs::File::create(dir.join(name))?)
}

pub fn write_table_file(dir: &Path, name: &str, header: &[&str], rows: &[Vec<f64>]) -> Result<()> {
    fs::create_dir_all(dir)?;
    write_table(header, rows, fs::File::create(dir.join(name))?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cloud_columns() {
        let mut buf = Vec::new();
        write_cloud(&PointCloud::new(vec![1.0, -2.0]), &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "index c0");
        assert_eq!(lines.len(), 3);
        assert_eq!(
            lines[2].split_whitespace().nth(1).unwrap().parse::<f64>().unwrap(),
            -2.0
        );
    }

    #[test]
    fn table_columns() {
        let mut buf = Vec::new();
        write_table(&["t", "d"], &[vec![1.0, 0.5]], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("t d\n"));
    }
}
