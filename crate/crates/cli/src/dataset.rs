//! Loading measured or exported CSV tables as fitter datasets.

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use kiparc_core::estimation::{DataPoint, Dataset, DatasetKind};

use crate::error::{CliError, CliResult};

/// Column layout per dataset kind: coordinate columns (the second may be
/// optional) and value columns, at least one of which must be present.
struct Schema {
    coords: [&'static str; 2],
    second_coord_required: bool,
    values: [&'static str; 2],
    all_values_required: bool,
}

fn schema(kind: DatasetKind) -> Schema {
    match kind {
        DatasetKind::GainMap | DatasetKind::GainSlice => Schema {
            coords: ["x", "y"],
            second_coord_required: true,
            values: ["Gs_dB", "Gi_dB"],
            all_values_required: false,
        },
        DatasetKind::Tuning => Schema {
            coords: ["I_A", ""],
            second_coord_required: false,
            values: ["f_a_Hz", "f_b_Hz"],
            all_values_required: false,
        },
        DatasetKind::Fringe => Schema {
            coords: ["phase_rad", "offset_Hz"],
            second_coord_required: false,
            values: ["Gs_dB", "Gi_dB"],
            all_values_required: false,
        },
        DatasetKind::Noise => Schema {
            coords: ["G_linear", ""],
            second_coord_required: false,
            values: ["NF_linear", ""],
            all_values_required: true,
        },
    }
}

/// Parses a CSV file into a validated dataset.
///
/// Lines starting with `#` are metadata (`# key: value`); a fringe file may
/// give its signal offset as `# offset_Hz: <value>` instead of a column.
/// An optional `weight` column holds positive inverse-variance weights.
/// Empty cells and `nan` mark missing values; rows with no values at all
/// are skipped.
pub fn load_dataset(path: &Path, kind: DatasetKind) -> CliResult<Dataset> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(format!("reading {}", path.display()), e))?;
    let points = parse_points(&text, path, kind)?;
    let dataset = Dataset::new(kind, points).map_err(|e| CliError::core(path.display().to_string(), e))?;
    log_summary(path, &dataset);
    Ok(dataset)
}

fn parse_points(text: &str, path: &Path, kind: DatasetKind) -> CliResult<Vec<DataPoint>> {
    let parse_err = |line: u64, message: String| CliError::DatasetParse {
        file: path.to_path_buf(),
        line,
        message,
    };

    let mut metadata = HashMap::new();
    for line in text.lines() {
        if let Some(rest) = line.trim_start().strip_prefix('#') {
            if let Some((k, v)) = rest.split_once(':') {
                metadata.insert(k.trim().to_string(), v.trim().to_string());
            }
        }
    }

    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let headers = reader
        .headers()
        .map_err(|e| parse_err(e.position().map_or(1, |p| p.line()), e.to_string()))?
        .clone();
    let column = |name: &str| -> Option<usize> {
        if name.is_empty() {
            None
        } else {
            headers.iter().position(|h| h == name)
        }
    };

    let s = schema(kind);
    let mut missing: Vec<&str> = Vec::new();
    let coord0 = column(s.coords[0]);
    if coord0.is_none() {
        missing.push(s.coords[0]);
    }
    let coord1 = column(s.coords[1]);
    if s.second_coord_required && coord1.is_none() {
        missing.push(s.coords[1]);
    }
    let value_cols = [column(s.values[0]), column(s.values[1])];
    let wanted: Vec<&str> = s.values.iter().copied().filter(|v| !v.is_empty()).collect();
    if s.all_values_required {
        missing.extend(wanted.iter().zip(&value_cols).filter(|(_, c)| c.is_none()).map(|(n, _)| *n));
    } else if value_cols.iter().all(Option::is_none) {
        missing.push("");
    }
    if !missing.is_empty() {
        let any_value = wanted.join("|");
        let names: Vec<&str> = missing.iter().map(|m| if m.is_empty() { any_value.as_str() } else { m }).collect();
        return Err(CliError::DatasetSchema {
            file: path.to_path_buf(),
            missing: names.join(", "),
        });
    }
    let weight_col = column("weight");

    let default_offset = match (kind, coord1, metadata.get("offset_Hz")) {
        (DatasetKind::Fringe, None, Some(v)) => v
            .parse::<f64>()
            .map_err(|_| parse_err(1, format!("metadata offset_Hz `{v}` is not a number")))?,
        _ => 0.0,
    };

    let mut points = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| parse_err(e.position().map_or(0, |p| p.line()), e.to_string()))?;
        let line = record.position().map_or(0, |p| p.line());
        let cell = |idx: usize, name: &str| -> CliResult<Option<f64>> {
            let raw = record.get(idx).unwrap_or("");
            if raw.is_empty() || raw.eq_ignore_ascii_case("nan") {
                return Ok(None);
            }
            raw.parse::<f64>()
                .map(Some)
                .map_err(|_| parse_err(line, format!("column {name}: `{raw}` is not a number")))
        };
        let required_cell = |idx: usize, name: &str| -> CliResult<f64> {
            cell(idx, name)?.ok_or_else(|| parse_err(line, format!("column {name} is empty")))
        };

        let c0 = required_cell(coord0.expect("checked above"), s.coords[0])?;
        let c1 = match coord1 {
            Some(idx) => required_cell(idx, s.coords[1])?,
            None => default_offset,
        };
        let mut values = [None, None];
        for (slot, col) in value_cols.iter().enumerate() {
            if let Some(idx) = col {
                values[slot] = cell(*idx, s.values[slot])?;
            }
        }
        let weight = match weight_col {
            Some(idx) => match cell(idx, "weight")? {
                Some(w) if w.is_finite() && w > 0.0 => w,
                Some(w) => return Err(parse_err(line, format!("weight must be positive, got {w}"))),
                None => 1.0,
            },
            None => 1.0,
        };
        if values.iter().all(Option::is_none) {
            continue;
        }
        points.push(DataPoint::new([c0, c1], values).weighted(weight));
    }
    Ok(points)
}

fn log_summary(path: &Path, data: &Dataset) {
    let range = |f: &dyn Fn(&DataPoint) -> Option<f64>| {
        data.points
            .iter()
            .filter_map(f)
            .fold(None, |acc: Option<(f64, f64)>, v| match acc {
                None => Some((v, v)),
                Some((lo, hi)) => Some((lo.min(v), hi.max(v))),
            })
    };
    log::info!("loaded {} ({} rows, kind {})", path.display(), data.len(), data.kind);
    if let Some((lo, hi)) = range(&|p| Some(p.coords[0])) {
        log::info!("  coordinate range [{lo}, {hi}]");
    }
    for slot in 0..2 {
        if let Some((lo, hi)) = range(&|p| p.values[slot]) {
            log::info!("  value {} range [{lo}, {hi}]", slot + 1);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str, kind: DatasetKind) -> CliResult<Vec<DataPoint>> {
        parse_points(text, Path::new("mem.csv"), kind)
    }

    #[test]
    fn three_line_tuning_file() {
        let pts = parse("I_A,f_a_Hz,f_b_Hz\n0,5.5e9,6.3e9\n1e-4,5.49e9,6.29e9\n", DatasetKind::Tuning).unwrap();
        assert_eq!(pts.len(), 2);
        assert_eq!(pts[1].coords[0], 1e-4);
        assert_eq!(pts[1].values, [Some(5.49e9), Some(6.29e9)]);
    }

    #[test]
    fn negative_weight_reports_its_line() {
        let err = parse("G_linear,NF_linear,weight\n1,1,1\n10,0.3,-2\n", DatasetKind::Noise).unwrap_err();
        match err {
            CliError::DatasetParse { line, message, .. } => {
                assert_eq!(line, 3);
                assert!(message.contains("weight"));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn bad_number_reports_its_line() {
        let text = "# note: header\nx,y,Gs_dB\n0,0,1\n0,1,abc\n";
        match parse(text, DatasetKind::GainMap).unwrap_err() {
            CliError::DatasetParse { line, .. } => assert_eq!(line, 4),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn missing_columns_are_named() {
        match parse("x,Gs_dB\n0,1\n", DatasetKind::GainMap).unwrap_err() {
            CliError::DatasetSchema { missing, .. } => assert_eq!(missing, "y"),
            other => panic!("{other:?}"),
        }
        match parse("G_linear\n1\n", DatasetKind::Noise).unwrap_err() {
            CliError::DatasetSchema { missing, .. } => assert_eq!(missing, "NF_linear"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn masked_cells_are_skipped_and_offsets_read_from_metadata() {
        let pts = parse("x,y,Gi_dB\n0,0,nan\n1,0,3\n", DatasetKind::GainMap).unwrap();
        assert_eq!(pts.len(), 1);
        assert_eq!(pts[0].values, [None, Some(3.0)]);

        let pts = parse("# offset_Hz: 2.5e6\nphase_rad,Gs_dB,Gi_dB\n0,1,2\n", DatasetKind::Fringe).unwrap();
        assert_eq!(pts[0].coords, [0.0, 2.5e6]);
    }
}
