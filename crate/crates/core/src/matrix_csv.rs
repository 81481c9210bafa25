//! Decision matrices as CSV.
//!
//! ```text
//! #direction,maximize,minimize
//! #weight,0.6,0.4
//! #preference,usual,linear:1:5
//! #scale,10,3
//! scheme,output,defects
//! Y1,34,2.1
//! Y2,41,3.4
//! ```
//!
//! Lines starting with `#` before the header form the sidecar block. Each
//! one names a property and gives one value per criterion column. All
//! sidecar rows are optional: direction defaults to `maximize`, weight and
//! scale to 1, preference to `usual`. The first header cell is ignored.

use thiserror::Error;

use crate::mcdm::{CriterionSpec, DecisionMatrix, Direction, McdmError, PreferenceFunction};

#[derive(Debug, Error)]
pub enum MatrixCsvError {
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("missing header row")]
    MissingHeader,
    #[error("sidecar line {line}: {reason}")]
    Sidecar { line: usize, reason: String },
    #[error("row {row}, column {column}: cannot parse {text:?} as a number")]
    Value { row: usize, column: usize, text: String },
    #[error(transparent)]
    Matrix(#[from] McdmError),
}

fn sidecar_err(line: usize, reason: impl Into<String>) -> MatrixCsvError {
    MatrixCsvError::Sidecar {
        line,
        reason: reason.into(),
    }
}

fn parse_preference(text: &str) -> Option<PreferenceFunction> {
    let mut parts = text.split(':').map(str::trim);
    match parts.next()?.to_ascii_lowercase().as_str() {
        "usual" => Some(PreferenceFunction::Usual),
        "linear" => {
            let q = parts.next()?.parse().ok()?;
            let p = parts.next()?.parse().ok()?;
            Some(PreferenceFunction::Linear { q, p })
        }
        _ => None,
    }
}

fn format_preference(p: PreferenceFunction) -> String {
    match p {
        PreferenceFunction::Usual => "usual".into(),
        PreferenceFunction::Linear { q, p } => format!("linear:{q}:{p}"),
    }
}

fn reader(text: &str) -> csv::Reader<&[u8]> {
    csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes())
}

pub fn parse_matrix_csv(text: &str) -> Result<DecisionMatrix, MatrixCsvError> {
    let (sidecar, body): (Vec<(usize, &str)>, Vec<&str>) = {
        let mut sidecar = Vec::new();
        let mut lines = text.lines().enumerate().peekable();
        while let Some((i, line)) = lines.peek().copied() {
            if let Some(rest) = line.trim_start().strip_prefix('#') {
                sidecar.push((i + 1, rest));
                lines.next();
            } else if line.trim().is_empty() {
                lines.next();
            } else {
                break;
            }
        }
        (sidecar, lines.map(|(_, l)| l).collect())
    };

    let body = body.join("\n");
    let mut rows = reader(&body).into_records();
    let header = rows.next().ok_or(MatrixCsvError::MissingHeader)??;
    let mut criteria: Vec<CriterionSpec> = header
        .iter()
        .skip(1)
        .map(|name| CriterionSpec::new(name, Direction::Maximize, 1.0))
        .collect();
    if criteria.is_empty() {
        return Err(McdmError::NoCriteria.into());
    }

    for (line, content) in sidecar {
        let record = reader(content)
            .into_records()
            .next()
            .ok_or_else(|| sidecar_err(line, "empty line"))??;
        let mut fields = record.iter();
        let property = fields.next().unwrap_or_default().to_ascii_lowercase();
        let values: Vec<&str> = fields.collect();
        if values.len() != criteria.len() {
            return Err(sidecar_err(
                line,
                format!("expected {} values, found {}", criteria.len(), values.len()),
            ));
        }
        for (c, v) in criteria.iter_mut().zip(values) {
            let bad = || sidecar_err(line, format!("invalid {property} value {v:?}"));
            match property.as_str() {
                "direction" => {
                    c.direction = match v.to_ascii_lowercase().as_str() {
                        "max" | "maximize" => Direction::Maximize,
                        "min" | "minimize" => Direction::Minimize,
                        _ => return Err(bad()),
                    }
                }
                "weight" => c.weight = v.parse().map_err(|_| bad())?,
                "scale" => c.discordance_scale = v.parse().map_err(|_| bad())?,
                "preference" => c.preference = parse_preference(v).ok_or_else(bad)?,
                _ => return Err(sidecar_err(line, format!("unknown property {property:?}"))),
            }
        }
    }

    let mut schemes = Vec::new();
    let mut scores = Vec::new();
    for (row, record) in rows.enumerate() {
        let record = record?;
        if record.iter().all(str::is_empty) {
            continue;
        }
        let mut fields = record.iter();
        schemes.push(fields.next().unwrap_or_default().to_owned());
        let values = fields
            .enumerate()
            .map(|(column, text)| {
                text.parse::<f64>().map_err(|_| MatrixCsvError::Value {
                    row: row + 1,
                    column: column + 1,
                    text: text.to_owned(),
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        scores.push(values);
    }

    let matrix = DecisionMatrix {
        schemes,
        criteria,
        scores,
    };
    matrix.validate()?;
    Ok(matrix)
}

fn csv_line(fields: impl IntoIterator<Item = String>) -> Result<String, csv::Error> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(fields)?;
    let bytes = w.into_inner().map_err(|e| csv::Error::from(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

pub fn write_matrix_csv(matrix: &DecisionMatrix) -> Result<String, MatrixCsvError> {
    let c = &matrix.criteria;
    let sidecar = |property: &str, values: Vec<String>| {
        csv_line(std::iter::once(property.to_owned()).chain(values)).map(|l| format!("#{l}"))
    };
    let direction = |d: Direction| match d {
        Direction::Maximize => "maximize".to_owned(),
        Direction::Minimize => "minimize".to_owned(),
    };
    let mut out = String::new();
    out += &sidecar("direction", c.iter().map(|c| direction(c.direction)).collect())?;
    out += &sidecar("weight", c.iter().map(|c| c.weight.to_string()).collect())?;
    out += &sidecar("preference", c.iter().map(|c| format_preference(c.preference)).collect())?;
    out += &sidecar("scale", c.iter().map(|c| c.discordance_scale.to_string()).collect())?;
    out += &csv_line(std::iter::once("scheme".to_owned()).chain(c.iter().map(|c| c.name.clone())))?;
    for (scheme, values) in matrix.schemes.iter().zip(&matrix.scores) {
        out += &csv_line(std::iter::once(scheme.clone()).chain(values.iter().map(f64::to_string)))?;
    }
    Ok(out)
}
