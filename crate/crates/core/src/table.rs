//! Row-oriented feature tables with a stable row id, read and written as CSV.
//!
//! The CSV header is `id` followed by the feature columns. Each table carries
//! the index of the operator that produced it; `(operator, id)` is the
//! provenance key of a row.

use std::io::{Read, Write};
use std::path::Path;

use crate::error::{invalid, Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RowKey {
    pub operator: u32,
    pub id: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FeatureTable {
    operator: u32,
    columns: Vec<String>,
    ids: Vec<u64>,
    data: Vec<f64>,
}

impl FeatureTable {
    pub fn new<S: AsRef<str>>(operator: u32, columns: &[S]) -> Self {
        Self { operator, columns: columns.iter().map(|c| c.as_ref().to_string()).collect(), ids: Vec::new(), data: Vec::new() }
    }

    pub fn operator(&self) -> u32 {
        self.operator
    }

    pub fn set_operator(&mut self, operator: u32) {
        self.operator = operator;
    }

    pub fn columns(&self) -> &[String] {
        &self.columns
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn ids(&self) -> &[u64] {
        &self.ids
    }

    pub fn key(&self, row: usize) -> RowKey {
        RowKey { operator: self.operator, id: self.ids[row] }
    }

    pub fn push_row(&mut self, id: u64, values: &[f64]) -> Result<()> {
        if values.len() != self.columns.len() {
            return invalid(format!("row has {} values, table has {} columns", values.len(), self.columns.len()));
        }
        self.ids.push(id);
        self.data.extend_from_slice(values);
        Ok(())
    }

    pub fn row(&self, r: usize) -> &[f64] {
        let w = self.columns.len();
        &self.data[r * w..(r + 1) * w]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        let w = self.columns.len();
        &mut self.data[r * w..(r + 1) * w]
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    pub fn require_column(&self, name: &str) -> Result<usize> {
        self.column_index(name).ok_or_else(|| Error::Contract(format!("table lacks column {name:?}")))
    }

    pub fn get(&self, r: usize, name: &str) -> Option<f64> {
        self.column_index(name).map(|c| self.row(r)[c])
    }

    pub fn column(&self, name: &str) -> Result<Vec<f64>> {
        let c = self.require_column(name)?;
        Ok((0..self.len()).map(|r| self.row(r)[c]).collect())
    }

    pub fn row_of_id(&self, id: u64) -> Option<usize> {
        self.ids.iter().position(|&i| i == id)
    }

    /// Appends a column, or overwrites it if the name exists.
    pub fn set_column(&mut self, name: &str, values: &[f64]) -> Result<()> {
        if values.len() != self.len() {
            return invalid(format!("column {name:?} has {} values for {} rows", values.len(), self.len()));
        }
        if let Some(c) = self.column_index(name) {
            for (r, v) in values.iter().enumerate() {
                self.row_mut(r)[c] = *v;
            }
            return Ok(());
        }
        let w = self.columns.len();
        let mut data = Vec::with_capacity(self.data.len() + values.len());
        for (r, v) in values.iter().enumerate() {
            data.extend_from_slice(&self.data[r * w..(r + 1) * w]);
            data.push(*v);
        }
        self.data = data;
        self.columns.push(name.to_string());
        Ok(())
    }

    /// New table holding the given rows, in the given order.
    pub fn select(&self, rows: &[usize]) -> Self {
        let mut out = Self { operator: self.operator, columns: self.columns.clone(), ids: Vec::new(), data: Vec::new() };
        for &r in rows {
            out.ids.push(self.ids[r]);
            out.data.extend_from_slice(self.row(r));
        }
        out
    }

    /// Renumbers rows `1..=n` in their current order.
    pub fn renumber(&mut self) {
        for (k, id) in self.ids.iter_mut().enumerate() {
            *id = k as u64 + 1;
        }
    }

    pub fn write_csv_to<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        let mut header = vec!["id".to_string()];
        header.extend(self.columns.iter().cloned());
        wr.write_record(&header)?;
        let mut rec = Vec::with_capacity(header.len());
        for r in 0..self.len() {
            rec.clear();
            rec.push(self.ids[r].to_string());
            rec.extend(self.row(r).iter().map(|v| v.to_string()));
            wr.write_record(&rec)?;
        }
        wr.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv_to(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("csv output is utf-8")
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        self.write_csv_to(std::fs::File::create(path)?)
    }

    pub fn read_csv_from<R: Read>(operator: u32, r: R) -> Result<Self> {
        let mut rd = csv::Reader::from_reader(r);
        let header: Vec<String> = rd.headers()?.iter().map(|s| s.trim().to_string()).collect();
        if header.first().map(String::as_str) != Some("id") {
            return Err(Error::Format("feature table header must start with id".into()));
        }
        let mut t = Self::new(operator, &header[1..]);
        let mut vals = Vec::with_capacity(header.len() - 1);
        for (n, rec) in rd.records().enumerate() {
            let rec = rec?;
            let bad = |f: &str| Error::Parse { line: n + 2, msg: format!("not a number: {f:?}") };
            let id = rec.get(0).unwrap_or("").trim().parse::<u64>().map_err(|_| bad(rec.get(0).unwrap_or("")))?;
            vals.clear();
            for f in rec.iter().skip(1) {
                vals.push(f.trim().parse::<f64>().map_err(|_| bad(f))?);
            }
            t.push_row(id, &vals).map_err(|e| Error::Parse { line: n + 2, msg: e.to_string() })?;
        }
        Ok(t)
    }

    pub fn read_csv(operator: u32, path: &Path) -> Result<Self> {
        Self::read_csv_from(operator, std::fs::File::open(path)?)
    }
}
