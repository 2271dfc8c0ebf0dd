use std::collections::HashMap;
use std::fs::File;
use std::io::Read;
use std::path::Path;

use super::{default_names, Dataset, LabelColumn};
use crate::error::{Result, TourError};

#[derive(Clone, Debug)]
pub struct CsvOptions {
    pub delimiter: u8,
    pub header: bool,
    /// Columns to embed. Empty means every column not listed as a label.
    pub embed_columns: Vec<String>,
    /// Columns read as categorical labels.
    pub label_columns: Vec<String>,
    /// Columns read as continuous labels.
    pub continuous_columns: Vec<String>,
}

impl Default for CsvOptions {
    fn default() -> Self {
        Self {
            delimiter: b',',
            header: true,
            embed_columns: Vec::new(),
            label_columns: Vec::new(),
            continuous_columns: Vec::new(),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct CsvReport {
    /// Rows dropped because an embedded value was missing or non-finite.
    pub dropped_rows: usize,
}

pub fn load_csv(path: impl AsRef<Path>, options: &CsvOptions) -> Result<(Dataset, CsvReport)> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| TourError::file(path, e))?;
    read_csv(file, options)
}

fn csv_error(e: csv::Error) -> TourError {
    let (line, message) = match e.position() {
        Some(p) => (p.line(), e.to_string()),
        None => (0, e.to_string()),
    };
    match e.into_kind() {
        csv::ErrorKind::Io(io) => TourError::Io(io),
        _ => TourError::Parse {
            line,
            column: 0,
            message,
        },
    }
}

/// Parses directly to `f32` so values round once; empty fields read as NaN.
fn parse_value(field: &str) -> Option<f32> {
    let f = field.trim();
    if f.is_empty() {
        return Some(f32::NAN);
    }
    f.parse::<f32>().ok()
}

pub fn read_csv<R: Read>(reader: R, options: &CsvOptions) -> Result<(Dataset, CsvReport)> {
    let mut rdr = csv::ReaderBuilder::new()
        .delimiter(options.delimiter)
        .has_headers(options.header)
        .from_reader(reader);

    let header_names: Option<Vec<String>> = if options.header {
        let headers = rdr.headers().map_err(csv_error)?;
        Some(headers.iter().map(|h| h.trim().to_string()).collect())
    } else {
        None
    };
    let mut records = rdr.records();
    let mut pending = None;
    let names: Vec<String> = if let Some(names) = header_names {
        names
    } else {
        match records.next() {
            Some(r) => {
                let r = r.map_err(csv_error)?;
                let n = r.len();
                pending = Some(r);
                default_names(n)
            }
            None => return Err(TourError::EmptyDataset),
        }
    };
    let index: HashMap<&str, usize> = names.iter().enumerate().map(|(i, n)| (n.as_str(), i)).collect();
    let lookup = |name: &String| {
        index
            .get(name.as_str())
            .copied()
            .ok_or_else(|| TourError::MissingColumn(name.clone()))
    };
    let cat_idx: Vec<usize> = options.label_columns.iter().map(lookup).collect::<Result<_>>()?;
    let cont_idx: Vec<usize> = options.continuous_columns.iter().map(lookup).collect::<Result<_>>()?;
    let embed_idx: Vec<usize> = if options.embed_columns.is_empty() {
        (0..names.len())
            .filter(|i| !cat_idx.contains(i) && !cont_idx.contains(i))
            .collect()
    } else {
        options.embed_columns.iter().map(lookup).collect::<Result<_>>()?
    };
    if embed_idx.is_empty() {
        return Err(TourError::InvalidArgument("no columns to embed".into()));
    }

    let mut columns: Vec<Vec<f32>> = vec![Vec::new(); embed_idx.len()];
    let mut cat_codes: Vec<Vec<u16>> = vec![Vec::new(); cat_idx.len()];
    let mut cat_dicts: Vec<(Vec<String>, HashMap<String, u16>)> = vec![Default::default(); cat_idx.len()];
    let mut cont_values: Vec<Vec<f32>> = vec![Vec::new(); cont_idx.len()];
    let mut report = CsvReport::default();
    let mut row_buf = vec![0f32; embed_idx.len()];

    let iter = pending.into_iter().map(Ok).chain(records);
    for record in iter {
        let record = record.map_err(csv_error)?;
        let line = record.position().map_or(0, |p| p.line());
        let field = |i: usize| -> Result<&str> {
            record.get(i).ok_or_else(|| TourError::Parse {
                line,
                column: i + 1,
                message: "missing field".into(),
            })
        };
        let mut finite = true;
        for (slot, &ci) in row_buf.iter_mut().zip(&embed_idx) {
            let v = parse_value(field(ci)?).ok_or_else(|| TourError::Parse {
                line,
                column: ci + 1,
                message: format!("not a number: {:?}", record.get(ci).unwrap_or("")),
            })?;
            if !v.is_finite() {
                finite = false;
            }
            *slot = v;
        }
        if !finite {
            report.dropped_rows += 1;
            continue;
        }
        for (col, v) in columns.iter_mut().zip(&row_buf) {
            col.push(*v);
        }
        for ((codes, (dict, lookup)), &ci) in cat_codes.iter_mut().zip(cat_dicts.iter_mut()).zip(&cat_idx) {
            let value = field(ci)?.to_string();
            let code = match lookup.get(&value) {
                Some(&c) => c,
                None => {
                    let c = u16::try_from(dict.len()).map_err(|_| TourError::Parse {
                        line,
                        column: ci + 1,
                        message: "more than 65536 categories".into(),
                    })?;
                    dict.push(value.clone());
                    lookup.insert(value, c);
                    c
                }
            };
            codes.push(code);
        }
        for (vals, &ci) in cont_values.iter_mut().zip(&cont_idx) {
            let v = parse_value(field(ci)?).ok_or_else(|| TourError::Parse {
                line,
                column: ci + 1,
                message: "not a number".into(),
            })?;
            vals.push(v);
        }
    }
    if columns[0].is_empty() {
        return Err(TourError::EmptyDataset);
    }
    if report.dropped_rows > 0 {
        log::warn!("dropped {} rows with non-finite values", report.dropped_rows);
    }

    let mut labels = Vec::new();
    for ((codes, (dict, _)), name) in cat_codes.into_iter().zip(cat_dicts).zip(&options.label_columns) {
        labels.push(LabelColumn::Categorical {
            name: name.clone(),
            codes,
            categories: dict,
        });
    }
    for (values, name) in cont_values.into_iter().zip(&options.continuous_columns) {
        labels.push(LabelColumn::Continuous {
            name: name.clone(),
            values,
        });
    }
    let dim_names = embed_idx.iter().map(|&i| names[i].clone()).collect();
    Ok((Dataset::new(columns, dim_names, labels)?, report))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reads_small_table_exactly() {
        let text = "a,b,c,d\n1.5,2,3,4\n-0.1,0.2,1e-3,7\n9,8,7,6\n";
        let (ds, report) = read_csv(text.as_bytes(), &CsvOptions::default()).unwrap();
        assert_eq!(report.dropped_rows, 0);
        assert_eq!((ds.n_rows(), ds.n_dims()), (3, 4));
        assert_eq!(ds.column(0), &[1.5f32, -0.1, 9.0]);
        assert_eq!(ds.column(2)[1], 1e-3f32);
        assert_eq!(ds.dim_names(), &["a", "b", "c", "d"]);
    }

    #[test]
    fn drops_nan_rows() {
        let text = "a,b\n1,2\nNaN,3\n4,5\n";
        let (ds, report) = read_csv(text.as_bytes(), &CsvOptions::default()).unwrap();
        assert_eq!(report.dropped_rows, 1);
        assert_eq!(ds.n_rows(), 2);
        assert_eq!(ds.column(1), &[2.0, 5.0]);
    }

    #[test]
    fn label_columns_and_missing_columns() {
        let text = "x,y,kind\n1,2,cat\n3,4,dog\n5,6,cat\n";
        let opts = CsvOptions {
            label_columns: vec!["kind".into()],
            ..Default::default()
        };
        let (ds, _) = read_csv(text.as_bytes(), &opts).unwrap();
        assert_eq!(ds.n_dims(), 2);
        match ds.label("kind").unwrap() {
            LabelColumn::Categorical {
                codes, categories, ..
            } => {
                assert_eq!(codes, &[0, 1, 0]);
                assert_eq!(categories, &["cat", "dog"]);
            }
            _ => panic!("expected categorical"),
        }
        let opts = CsvOptions {
            label_columns: vec!["nope".into()],
            ..Default::default()
        };
        assert!(matches!(
            read_csv(text.as_bytes(), &opts),
            Err(TourError::MissingColumn(_))
        ));
    }

    #[test]
    fn parse_errors_carry_position() {
        let text = "a,b\n1,2\n3,oops\n";
        match read_csv(text.as_bytes(), &CsvOptions::default()) {
            Err(TourError::Parse { line, column, .. }) => {
                assert_eq!(line, 3);
                assert_eq!(column, 2);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn headerless_and_delimiter() {
        let text = "1;2\n3;4\n";
        let opts = CsvOptions {
            delimiter: b';',
            header: false,
            ..Default::default()
        };
        let (ds, _) = read_csv(text.as_bytes(), &opts).unwrap();
        assert_eq!(ds.n_rows(), 2);
        assert_eq!(ds.dim_names(), &["d0", "d1"]);
    }

    #[test]
    fn empty_input() {
        assert!(matches!(
            read_csv("a,b\n".as_bytes(), &CsvOptions::default()),
            Err(TourError::EmptyDataset)
        ));
    }
}
