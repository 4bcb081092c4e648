//! Coincidence input files.
//!
//! CSV: header `nu,phase_or_angle,count`. Rows for ν = 1..4 carry the direct
//! coincidence count and leave the angle empty (or omit the column); rows
//! for ν = 5..16 are fringe samples at the given reference phase in rad.
//! JSON: an already normalized set, `{"direct": [4], "interference": [12],
//! "contrast_ref": [12]}`.

use std::io::Write;

use xkerr::tomography::{CoincidenceSet, FringeData, FringeSeries};

#[derive(Debug, thiserror::Error)]
pub enum InputError {
    #[error("cannot read {path}: {reason}")]
    Read { path: String, reason: String },
    #[error("{path}:{line}: `{field}`: {reason}")]
    Row { path: String, line: u64, field: &'static str, reason: String },
    #[error("{path}: {reason}")]
    Content { path: String, reason: String },
}

pub const CSV_HEADER: [&str; 3] = ["nu", "phase_or_angle", "count"];

/// Raw CSV contents before normalization.
#[derive(Debug, Clone, PartialEq)]
pub struct CoincidenceTable {
    pub direct: [f64; 4],
    /// (angles, counts) for ν = 5..16.
    pub fringes: Vec<(Vec<f64>, Vec<f64>)>,
}

impl CoincidenceTable {
    /// Attaches contrasts and conditioning totals. Without explicit totals a
    /// fringe is normalized per sample to the direct coincidence total
    /// divided by `detection_efficiency`.
    pub fn fringe_data(&self, contrast: &[f64; 12], totals: Option<&[f64; 12]>, detection_efficiency: f64) -> FringeData {
        let per_sample = self.direct.iter().sum::<f64>() / detection_efficiency;
        let fringes = self
            .fringes
            .iter()
            .enumerate()
            .map(|(k, (angles, counts))| FringeSeries {
                nu: k + 5,
                angles: angles.clone(),
                counts: counts.clone(),
                conditioning_total: totals.map_or(per_sample * counts.len() as f64, |t| t[k]),
                contrast: contrast[k],
            })
            .collect();
        FringeData { direct: self.direct, fringes }
    }
}

pub fn write_csv(data: &FringeData, out: &mut dyn Write) -> std::io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for (k, n) in data.direct.iter().enumerate() {
        w.write_record([(k + 1).to_string(), String::new(), n.to_string()])?;
    }
    for s in &data.fringes {
        for (x, n) in s.angles.iter().zip(&s.counts) {
            w.write_record([s.nu.to_string(), x.to_string(), n.to_string()])?;
        }
    }
    w.flush()
}

pub fn parse_csv(text: &str, path: &str) -> Result<CoincidenceTable, InputError> {
    let mut reader = csv::ReaderBuilder::new().flexible(true).trim(csv::Trim::All).from_reader(text.as_bytes());
    let header = reader.headers().map_err(|e| InputError::Content { path: path.into(), reason: e.to_string() })?.clone();
    let names: Vec<&str> = header.iter().collect();
    if names != CSV_HEADER && names != CSV_HEADER[..1].iter().chain(&CSV_HEADER[2..]).copied().collect::<Vec<_>>() {
        return Err(InputError::Row {
            path: path.into(),
            line: 1,
            field: "header",
            reason: format!("expected `{}`, got `{}`", CSV_HEADER.join(","), names.join(",")),
        });
    }
    let mut direct = [None; 4];
    let mut fringes: Vec<(Vec<f64>, Vec<f64>)> = vec![(Vec::new(), Vec::new()); 12];
    for record in reader.records() {
        let record = record.map_err(|e| InputError::Content { path: path.into(), reason: e.to_string() })?;
        let line = record.position().map_or(0, |p| p.line());
        let bad = |field, reason: String| InputError::Row { path: path.into(), line, field, reason };
        let number = |field: &'static str, s: &str| -> Result<f64, InputError> {
            let v: f64 = s.parse().map_err(|_| bad(field, format!("not a number: `{s}`")))?;
            if v.is_finite() {
                Ok(v)
            } else {
                Err(bad(field, format!("must be finite, got {v}")))
            }
        };
        let (nu_s, angle_s, count_s) = match record.len() {
            2 => (&record[0], "", &record[1]),
            3 => (&record[0], &record[1], &record[2]),
            n => return Err(bad("row", format!("expected 2 or 3 fields, got {n}"))),
        };
        let nu: usize = nu_s.parse().map_err(|_| bad("nu", format!("not an integer: `{nu_s}`")))?;
        let count = number("count", count_s)?;
        if count < 0.0 {
            return Err(bad("count", format!("must be >= 0, got {count}")));
        }
        match nu {
            1..=4 => {
                if !angle_s.is_empty() {
                    return Err(bad("phase_or_angle", format!("must be empty for nu = {nu}")));
                }
                if direct[nu - 1].replace(count).is_some() {
                    return Err(bad("nu", format!("duplicate row for nu = {nu}")));
                }
            }
            5..=16 => {
                if angle_s.is_empty() {
                    return Err(bad("phase_or_angle", format!("required for nu = {nu}")));
                }
                let angle = number("phase_or_angle", angle_s)?;
                fringes[nu - 5].0.push(angle);
                fringes[nu - 5].1.push(count);
            }
            _ => return Err(bad("nu", format!("must lie in 1..=16, got {nu}"))),
        }
    }
    let content = |reason: String| InputError::Content { path: path.into(), reason };
    let mut out = [0.0; 4];
    for (k, d) in direct.iter().enumerate() {
        out[k] = d.ok_or_else(|| content(format!("missing row for nu = {}", k + 1)))?;
    }
    for (k, (angles, _)) in fringes.iter().enumerate() {
        if angles.len() < 4 {
            return Err(content(format!("nu = {} has {} fringe samples, need >= 4", k + 5, angles.len())));
        }
    }
    Ok(CoincidenceTable { direct: out, fringes })
}

pub fn parse_json(text: &str, path: &str) -> Result<CoincidenceSet, InputError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let set: CoincidenceSet = serde_path_to_error::deserialize(de)
        .map_err(|e| InputError::Content { path: path.into(), reason: format!("at `{}`: {}", e.path(), e.inner()) })?;
    set.validate().map_err(|e| InputError::Content { path: path.into(), reason: e.to_string() })?;
    Ok(set)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_csv() -> String {
        let mut s = String::from("nu,phase_or_angle,count\n1,,10\n2,,20\n3,,30\n4,,40\n");
        for nu in 5..=16 {
            for j in 0..4 {
                s.push_str(&format!("{nu},{},{}\n", j as f64 * 1.5, 100 + j));
            }
        }
        s
    }

    #[test]
    fn parses_direct_and_fringe_rows() {
        let t = parse_csv(&sample_csv(), "x.csv").unwrap();
        assert_eq!(t.direct, [10.0, 20.0, 30.0, 40.0]);
        assert_eq!(t.fringes[11].0, vec![0.0, 1.5, 3.0, 4.5]);
        let data = t.fringe_data(&[1.0; 12], None, 0.5);
        assert_eq!(data.fringes[0].conditioning_total, 200.0 * 4.0);
        assert_eq!(data.fringes[3].nu, 8);
    }

    #[test]
    fn two_column_direct_rows() {
        let text = sample_csv().replace("1,,10", "1,10");
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[1], "1,10");
        assert_eq!(parse_csv(&text, "x.csv").unwrap().direct[0], 10.0);
    }

    #[test]
    fn diagnostics_carry_line_and_field() {
        let cases = [
            (sample_csv().replace("3,,30", "3,,abc"), ":4:", "count"),
            (sample_csv().replace("2,,20", "2,,-1"), ":3:", "count"),
            (sample_csv().replace("4,,40", "17,,40"), ":5:", "nu"),
            (sample_csv().replace("5,0,100", "5,,100"), ":6:", "phase_or_angle"),
            (sample_csv().replace("1,,10", "1,0.5,10"), ":2:", "phase_or_angle"),
        ];
        for (text, line, field) in cases {
            let err = parse_csv(&text, "x.csv").unwrap_err().to_string();
            assert!(err.contains(line) && err.contains(field), "{err}");
        }
        let err = parse_csv(&sample_csv().replace("4,,40\n", ""), "x.csv").unwrap_err().to_string();
        assert!(err.contains("missing row for nu = 4"), "{err}");
        let err = parse_csv("a,b,c\n", "x.csv").unwrap_err().to_string();
        assert!(err.contains("header"), "{err}");
    }

    #[test]
    fn writer_round_trips() {
        let t = parse_csv(&sample_csv(), "x.csv").unwrap();
        let data = t.fringe_data(&[1.0; 12], None, 1.0);
        let mut buf = Vec::new();
        write_csv(&data, &mut buf).unwrap();
        assert_eq!(parse_csv(std::str::from_utf8(&buf).unwrap(), "y.csv").unwrap(), t);
    }

    #[test]
    fn json_set_is_validated() {
        let ok = r#"{"direct": [1, 2, 3, 4], "interference": [0,0,0,0,0,0,0,0,0,0,0,0], "contrast_ref": [1,1,1,1,1,1,1,1,1,1,1,1]}"#;
        assert!(parse_json(ok, "s.json").is_ok());
        let err = parse_json(&ok.replace("[1, 2, 3, 4]", "[1, 2, 3]"), "s.json").unwrap_err().to_string();
        assert!(err.contains("direct"), "{err}");
    }
}
