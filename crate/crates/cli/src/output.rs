use std::fs::{self, File};
use std::path::{Path, PathBuf};

use crate::failure::Failure;

/// A CSV file that is deleted again unless [`CsvOut::finish`] succeeds.
pub struct CsvOut {
    path: PathBuf,
    writer: Option<csv::Writer<File>>,
}

impl CsvOut {
    pub fn create(dir: &Path, name: &str, header: &[String]) -> Result<Self, Failure> {
        fs::create_dir_all(dir).map_err(|e| Failure::io(dir, e))?;
        let path = dir.join(name);
        let file = File::create(&path).map_err(|e| Failure::io(&path, e))?;
        let mut out = CsvOut {
            writer: Some(csv::Writer::from_writer(file)),
            path,
        };
        out.row(header)?;
        Ok(out)
    }

    pub fn row<S: AsRef<[u8]>>(&mut self, fields: &[S]) -> Result<(), Failure> {
        let w = self.writer.as_mut().expect("writer open until finish");
        w.write_record(fields).map_err(|e| csv_failure(&self.path, e))
    }

    pub fn finish(mut self) -> Result<PathBuf, Failure> {
        let mut w = self.writer.take().expect("finish called once");
        w.flush().map_err(|e| Failure::io(&self.path, e))?;
        Ok(std::mem::take(&mut self.path))
    }
}

impl Drop for CsvOut {
    fn drop(&mut self) {
        if self.writer.is_some() {
            let _ = fs::remove_file(&self.path);
        }
    }
}

fn csv_failure(path: &Path, e: csv::Error) -> Failure {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Failure::io(path, io),
        other => Failure::Usage(format!("{}: {other:?}", path.display())),
    }
}

/// Plain-text table with right-aligned columns.
pub fn print_table(header: &[&str], rows: &[Vec<String>]) {
    let mut widths: Vec<usize> = header.iter().map(|h| h.chars().count()).collect();
    for row in rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.chars().count());
        }
    }
    let line = |cells: Vec<&str>| {
        let parts: Vec<String> = cells
            .iter()
            .zip(&widths)
            .enumerate()
            .map(|(i, (c, &w))| if i == 0 { format!("{c:<w$}") } else { format!("{c:>w$}") })
            .collect();
        println!("{}", parts.join("  ").trim_end());
    };
    line(header.to_vec());
    for row in rows {
        line(row.iter().map(String::as_str).collect());
    }
}

pub fn fixed(x: f64, digits: usize) -> String {
    format!("{x:.digits$}")
}

/// Shortest round-trip representation, so reruns give identical files.
pub fn exact(x: f64) -> String {
    format!("{x}")
}
