//! CSV instance files: one `<TABLE>.csv` per table, header row first.

use std::path::{Path, PathBuf};

use super::{Cell, Checker, Instance, Value, Violation};
use crate::model::{ColumnType, OBJECT_ID};

#[derive(Debug, thiserror::Error)]
pub enum LoadError {
    #[error("{}: {source}", path.display())]
    Csv { path: PathBuf, source: csv::Error },
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{}: unknown column {column}", path.display())]
    UnknownColumn { path: PathBuf, column: String },
    #[error("{}: missing column {column}", path.display())]
    MissingColumn { path: PathBuf, column: String },
    #[error("{}:{line}: column {column}: {reason}", path.display())]
    Unparseable {
        path: PathBuf,
        line: u64,
        column: String,
        reason: String,
    },
    #[error("{}:{line}: duplicate x {x}", path.display())]
    DuplicateRow { path: PathBuf, line: u64, x: i64 },
}

/// Parses a CSV cell of a column; empty text is null.
pub fn parse_cell(ty: &ColumnType, text: &str) -> Result<Cell, String> {
    if text.is_empty() {
        return Ok(None);
    }
    if let ColumnType::Coded { values } = ty {
        if let Some(i) = values.iter().position(|v| v == text) {
            return Ok(Some(Value::Int(i as i64 + 1)));
        }
    }
    if ty.is_integer() {
        text.trim()
            .parse::<i64>()
            .map(|v| Some(Value::Int(v)))
            .map_err(|_| format!("'{text}' is not an integer"))
    } else {
        Ok(Some(Value::Str(text.to_string())))
    }
}

impl Checker<'_> {
    /// Loads `<TABLE>.csv` files from `dir` (missing files are empty tables)
    /// and recomputes derived columns. Dangling references are returned as
    /// violations rather than errors.
    pub fn load_instance(&self, dir: &Path, current_year: i64) -> Result<(Instance, Vec<Violation>), LoadError> {
        let mut inst = self.empty_instance(current_year);
        for (ti, table) in self.schema.tables.iter().enumerate() {
            let path = dir.join(format!("{}.csv", table.name));
            if !path.exists() {
                continue;
            }
            let csv_err = |source| LoadError::Csv {
                path: path.clone(),
                source,
            };
            let mut rdr = csv::Reader::from_path(&path).map_err(csv_err)?;
            let headers = rdr.headers().map_err(csv_err)?.clone();
            let mut map = Vec::new();
            for h in headers.iter() {
                let ci = table.column_index(h).ok_or_else(|| LoadError::UnknownColumn {
                    path: path.clone(),
                    column: h.to_string(),
                })?;
                map.push(ci);
            }
            for (ci, c) in table.columns.iter().enumerate() {
                if c.computed_expr.is_none() && !map.contains(&ci) {
                    return Err(LoadError::MissingColumn {
                        path: path.clone(),
                        column: c.name.clone(),
                    });
                }
            }
            let x_col = table.column_index(OBJECT_ID).expect("x column");
            for rec in rdr.records() {
                let rec = rec.map_err(csv_err)?;
                let line = rec.position().map_or(0, |p| p.line());
                let mut row: Vec<Cell> = vec![None; table.columns.len()];
                for (text, &ci) in rec.iter().zip(&map) {
                    let col = &table.columns[ci];
                    row[ci] = parse_cell(&col.sql_type, text).map_err(|reason| LoadError::Unparseable {
                        path: path.clone(),
                        line,
                        column: col.name.clone(),
                        reason,
                    })?;
                }
                let Some(Value::Int(x)) = row[x_col] else {
                    return Err(LoadError::Unparseable {
                        path: path.clone(),
                        line,
                        column: OBJECT_ID.to_string(),
                        reason: "missing identifier".to_string(),
                    });
                };
                if inst.tables[ti].rows.insert(x, row).is_some() {
                    return Err(LoadError::DuplicateRow {
                        path: path.clone(),
                        line,
                        x,
                    });
                }
            }
        }
        self.recompute_derived(&mut inst);
        let dangling = (0..self.schema.tables.len())
            .flat_map(|t| {
                let fks: Vec<&str> = self.schema.tables[t].foreign_keys.iter().map(|f| f.id.as_str()).collect();
                self.table_violations(&inst, t, None)
                    .into_iter()
                    .filter(move |v| fks.contains(&v.constraint_id.as_str()))
            })
            .collect();
        Ok((inst, dangling))
    }
}

/// Writes one `<TABLE>.csv` per table into `dir`.
pub fn write_instance(inst: &Instance, dir: &Path) -> Result<(), LoadError> {
    std::fs::create_dir_all(dir).map_err(|source| LoadError::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    for t in &inst.tables {
        let path = dir.join(format!("{}.csv", t.name));
        let csv_err = |source| LoadError::Csv {
            path: path.clone(),
            source,
        };
        let mut w = csv::Writer::from_path(&path).map_err(csv_err)?;
        w.write_record(&t.columns).map_err(csv_err)?;
        for row in t.rows.values() {
            w.write_record(row.iter().map(|c| c.as_ref().map(Value::to_string).unwrap_or_default()))
                .map_err(csv_err)?;
        }
        w.flush().map_err(|source| LoadError::Io {
            path: path.clone(),
            source,
        })?;
    }
    Ok(())
}
