//! Long-format CSV input.

use std::collections::HashMap;

use super::CliError;

/// Dense indices for string labels, in order of first appearance.
#[derive(Debug, Default, Clone)]
pub struct Labeler {
    index: HashMap<String, usize>,
    labels: Vec<String>,
}

impl Labeler {
    pub fn id(&mut self, label: &str) -> usize {
        if let Some(&k) = self.index.get(label) {
            return k;
        }
        self.labels.push(label.to_string());
        self.index.insert(label.to_string(), self.labels.len() - 1);
        self.labels.len() - 1
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }
}

#[derive(Debug, Clone)]
pub struct Record {
    /// 1-based line number in the file, header included.
    pub line: usize,
    pub keys: Vec<String>,
    pub values: Vec<f64>,
}

/// A parsed table: index columns, value columns and one record per row.
#[derive(Debug, Clone)]
pub struct LongTable {
    pub index_names: Vec<String>,
    pub value_names: Vec<String>,
    pub has_unit_column: bool,
    pub records: Vec<Record>,
}

fn index_columns(header: &[String]) -> Result<Vec<String>, CliError> {
    if header.iter().any(|h| h == "i") && header.iter().any(|h| h == "t") {
        return Ok(vec!["i".into(), "t".into()]);
    }
    let numbered: Vec<String> = (1..).map(|d| format!("i{d}")).take_while(|c| header.contains(c)).collect();
    if numbered.len() >= 2 {
        return Ok(numbered);
    }
    Err(CliError::Schema { line: 1, msg: "expected index columns 'i,t' or 'i1,i2,...'".into() })
}

/// Parses a comma-separated file with a header row. Index columns are `i,t`
/// or `i1..iD`; value columns are `vars` (default `y`); a column `r` marks
/// units within cells.
pub fn read_long_csv(bytes: &[u8], vars: &[String]) -> Result<LongTable, CliError> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(bytes);
    let header: Vec<String> = rdr
        .headers()
        .map_err(|e| CliError::Schema { line: 1, msg: e.to_string() })?
        .iter()
        .map(String::from)
        .collect();
    let index_names = index_columns(&header)?;
    let value_names = if vars.is_empty() { vec!["y".to_string()] } else { vars.to_vec() };
    let locate = |name: &String| {
        header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| CliError::Schema { line: 1, msg: format!("missing column '{name}'") })
    };
    let index_pos = index_names.iter().map(locate).collect::<Result<Vec<_>, _>>()?;
    let value_pos = value_names.iter().map(locate).collect::<Result<Vec<_>, _>>()?;

    let mut records = Vec::new();
    for (k, row) in rdr.records().enumerate() {
        let line = k + 2;
        let row = row.map_err(|e| CliError::Schema { line, msg: e.to_string() })?;
        let keys = index_pos.iter().map(|&p| row.get(p).unwrap_or("").to_string()).collect::<Vec<_>>();
        if keys.iter().any(String::is_empty) {
            return Err(CliError::Schema { line, msg: "empty index value".into() });
        }
        let mut values = Vec::with_capacity(value_pos.len());
        for (&p, name) in value_pos.iter().zip(&value_names) {
            let raw = row.get(p).unwrap_or("");
            let v: f64 = raw
                .parse()
                .map_err(|_| CliError::Schema { line, msg: format!("column '{name}': cannot read '{raw}' as a number") })?;
            if !v.is_finite() {
                return Err(CliError::Schema { line, msg: format!("column '{name}' is not finite") });
            }
            values.push(v);
        }
        records.push(Record { line, keys, values });
    }
    if records.is_empty() {
        return Err(CliError::Schema { line: 2, msg: "no data rows".into() });
    }
    Ok(LongTable { index_names, value_names, has_unit_column: header.iter().any(|h| h == "r"), records })
}
