//! External (factors, representations) tables, so third-party models can
//! be scored without generative access.
//!
//! Format: UTF-8 CSV with header `factor_0,..,factor_{K-1},rep_0,..,rep_{D-1}`,
//! integer factors, decimal-float representations.

use crate::error::{Error, Result};
use std::io::Write;
use std::path::Path;

#[derive(Debug, Clone, PartialEq)]
pub struct ExternalTable {
    /// `[n_rows][n_factors]`, raw integer factor values.
    pub factors: Vec<Vec<i64>>,
    /// `[n_rows][n_dims]` representation matrix.
    pub reps: Vec<Vec<f64>>,
}

impl ExternalTable {
    pub fn num_rows(&self) -> usize {
        self.factors.len()
    }

    pub fn num_factors(&self) -> usize {
        self.factors.first().map_or(0, Vec::len)
    }

    pub fn num_dims(&self) -> usize {
        self.reps.first().map_or(0, Vec::len)
    }

    /// Factor columns reindexed to dense `0..cardinality` labels, in
    /// ascending order of the raw values.
    pub fn categorical_factors(&self) -> (Vec<Vec<usize>>, Vec<usize>) {
        let k = self.num_factors();
        let mut columns = Vec::with_capacity(k);
        let mut cardinalities = Vec::with_capacity(k);
        for f in 0..k {
            let mut levels: Vec<i64> = self.factors.iter().map(|r| r[f]).collect();
            levels.sort_unstable();
            levels.dedup();
            let col = self
                .factors
                .iter()
                .map(|r| levels.binary_search(&r[f]).expect("level present"))
                .collect();
            columns.push(col);
            cardinalities.push(levels.len());
        }
        (columns, cardinalities)
    }
}

pub fn load_external_table(path: &Path) -> Result<ExternalTable> {
    let content = std::fs::read_to_string(path)?;
    parse_external_table(&content)
}

pub fn parse_external_table(content: &str) -> Result<ExternalTable> {
    let mut lines = content.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| Error::Parse {
            line: 1,
            message: "empty file".into(),
        })?;
    let columns: Vec<&str> = header.split(',').map(str::trim).collect();
    let k = columns.iter().take_while(|c| c.starts_with("factor_")).count();
    let d = columns.len() - k;
    if k == 0 || d == 0 {
        return Err(Error::Parse {
            line: 1,
            message: format!(
                "header must be factor_0..factor_{{K-1}},rep_0..rep_{{D-1}}, got '{header}'"
            ),
        });
    }
    for (i, c) in columns.iter().enumerate() {
        let expect = if i < k {
            format!("factor_{i}")
        } else {
            format!("rep_{}", i - k)
        };
        if *c != expect {
            return Err(Error::Parse {
                line: 1,
                message: format!("column {} is '{c}', expected '{expect}'", i + 1),
            });
        }
    }
    let mut factors = Vec::new();
    let mut reps = Vec::new();
    for (idx, line) in lines {
        let line_no = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != k + d {
            return Err(Error::Parse {
                line: line_no,
                message: format!("expected {} columns, found {}", k + d, fields.len()),
            });
        }
        let mut frow = Vec::with_capacity(k);
        for (i, field) in fields[..k].iter().enumerate() {
            let v: i64 = field.parse().map_err(|_| Error::Parse {
                line: line_no,
                message: format!("factor_{i} value '{field}' is not an integer"),
            })?;
            frow.push(v);
        }
        let mut rrow = Vec::with_capacity(d);
        for (i, field) in fields[k..].iter().enumerate() {
            let v: f64 = field.parse().map_err(|_| Error::Parse {
                line: line_no,
                message: format!("rep_{i} value '{field}' is not a number"),
            })?;
            rrow.push(v);
        }
        factors.push(frow);
        reps.push(rrow);
    }
    if factors.is_empty() {
        return Err(Error::Parse {
            line: 1,
            message: "table has a header but no rows".into(),
        });
    }
    Ok(ExternalTable { factors, reps })
}

pub fn export_external_table(path: &Path, table: &ExternalTable) -> Result<()> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    let k = table.num_factors();
    let d = table.num_dims();
    let mut header = Vec::with_capacity(k + d);
    for i in 0..k {
        header.push(format!("factor_{i}"));
    }
    for i in 0..d {
        header.push(format!("rep_{i}"));
    }
    writeln!(out, "{}", header.join(","))?;
    for (frow, rrow) in table.factors.iter().zip(&table.reps) {
        let mut fields: Vec<String> = frow.iter().map(i64::to_string).collect();
        // `{}` prints the shortest representation that round-trips.
        fields.extend(rrow.iter().map(|v| format!("{v}")));
        writeln!(out, "{}", fields.join(","))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn well_formed_three_row_file_parses() {
        let text = "factor_0,factor_1,rep_0,rep_1,rep_2\n\
                    0,1,0.5,-1.25,3\n\
                    1,0,0.25,2.5,-0.125\n\
                    2,1,1,0,0.75\n";
        let t = parse_external_table(text).unwrap();
        assert_eq!(t.num_rows(), 3);
        assert_eq!(t.num_factors(), 2);
        assert_eq!(t.num_dims(), 3);
        assert_eq!(t.factors[2], vec![2, 1]);
    }

    #[test]
    fn missing_column_names_the_row() {
        let text = "factor_0,rep_0\n0,0.5\n1\n";
        let err = parse_external_table(text).unwrap_err();
        match err {
            Error::Parse { line, .. } => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn non_integer_factor_is_rejected() {
        let text = "factor_0,rep_0\n0.5,0.5\n";
        assert!(matches!(
            parse_external_table(text),
            Err(Error::Parse { line: 2, .. })
        ));
    }

    #[test]
    fn malformed_header_is_rejected() {
        assert!(parse_external_table("rep_0,factor_0\n1,0\n").is_err());
        assert!(parse_external_table("factor_0,factor_2,rep_0\n1,2,0\n").is_err());
    }

    #[test]
    fn export_then_load_round_trips() {
        let table = ExternalTable {
            factors: vec![vec![0, 3], vec![1, 2], vec![2, 0]],
            reps: vec![
                vec![0.123456789, -2.5],
                vec![1.0 / 3.0, 7.25],
                vec![-0.0625, 1e-9],
            ],
        };
        let dir = std::env::temp_dir().join("disentangle_table_test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("roundtrip.csv");
        export_external_table(&path, &table).unwrap();
        let loaded = load_external_table(&path).unwrap();
        assert_eq!(loaded, table);
    }

    #[test]
    fn categorical_reindexing_is_dense() {
        let table = ExternalTable {
            factors: vec![vec![10], vec![30], vec![10], vec![20]],
            reps: vec![vec![0.0]; 4],
        };
        let (cols, cards) = table.categorical_factors();
        assert_eq!(cols[0], vec![0, 2, 0, 1]);
        assert_eq!(cards, vec![3]);
    }
}
