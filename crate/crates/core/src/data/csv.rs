//! Dataset CSV: header `SD,GP,CAT,MAL,SC,label`, optionally followed by
//! the provenance columns `hospital_id`, `lab_id` and `timestamp`.

use std::io::{Read, Write};

use super::{BiomarkerVector, Dataset, LabeledSample, OcdClass, Provenance, FEATURE_COUNT, FEATURE_NAMES};
use crate::error::{Error, Result};

pub const CSV_HEADER: &str = "SD,GP,CAT,MAL,SC,label";

const PROVENANCE_COLUMNS: [&str; 3] = ["hospital_id", "lab_id", "timestamp"];

pub fn parse_dataset_csv(text: &str) -> Result<Dataset> {
    read_dataset_csv(text.as_bytes())
}

pub fn read_dataset_csv<R: Read>(reader: R) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);

    let mut records = rdr.records();
    let header = match records.next() {
        Some(r) => r.map_err(|e| csv_error(e, 1))?,
        None => return Err(Error::Parse { line: 1, message: "missing header".into() }),
    };
    let extras = parse_header(&header)?;
    let width = 1 + FEATURE_COUNT + extras.len();

    let mut samples = Vec::new();
    for record in records {
        let record = record.map_err(|e| csv_error(e, 0))?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() == 1 && record[0].is_empty() {
            continue;
        }
        if record.len() != width {
            return Err(Error::Parse {
                line,
                message: format!("expected {width} columns, found {}", record.len()),
            });
        }
        let mut values = [0.0; FEATURE_COUNT];
        for (i, v) in values.iter_mut().enumerate() {
            let field = &record[i];
            *v = field
                .parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .ok_or_else(|| Error::Parse {
                    line,
                    message: format!("{} value {field:?} is not a finite number", FEATURE_NAMES[i]),
                })?;
        }
        let features = BiomarkerVector::from_array(values).expect("checked finite");
        let label: OcdClass = record[FEATURE_COUNT].parse().map_err(|_| Error::Parse {
            line,
            message: format!("unknown label {:?}", &record[FEATURE_COUNT]),
        })?;

        let mut provenance = Provenance::default();
        for (offset, column) in extras.iter().enumerate() {
            let value = &record[FEATURE_COUNT + 1 + offset];
            if value.is_empty() {
                continue;
            }
            let slot = match *column {
                "hospital_id" => &mut provenance.hospital_id,
                "lab_id" => &mut provenance.lab_id,
                _ => &mut provenance.timestamp,
            };
            *slot = Some(value.to_string());
        }
        samples.push(LabeledSample::new(features, label).with_provenance(provenance));
    }
    Ok(Dataset::new(samples))
}

fn parse_header(header: &csv::StringRecord) -> Result<Vec<&'static str>> {
    let bad = |message: String| Error::Parse { line: 1, message };
    let required = CSV_HEADER.split(',').collect::<Vec<_>>();
    if header.len() < required.len() || header.iter().zip(&required).any(|(h, r)| !h.eq_ignore_ascii_case(r)) {
        return Err(bad(format!("header must start with {CSV_HEADER}")));
    }
    let mut extras = Vec::new();
    for name in header.iter().skip(required.len()) {
        let column = PROVENANCE_COLUMNS
            .iter()
            .find(|c| c.eq_ignore_ascii_case(name))
            .ok_or_else(|| bad(format!("unexpected column {name:?}")))?;
        if extras.contains(column) {
            return Err(bad(format!("duplicate column {name:?}")));
        }
        extras.push(*column);
    }
    Ok(extras)
}

fn csv_error(e: csv::Error, fallback_line: u64) -> Error {
    let line = e.position().map_or(fallback_line, |p| p.line());
    Error::Parse { line, message: e.to_string() }
}

/// Writes the dataset with round-trip exact float formatting. Provenance
/// columns are emitted only when at least one sample carries provenance.
pub fn write_dataset_csv<W: Write>(dataset: &Dataset, writer: W) -> Result<()> {
    let with_provenance = dataset.iter().any(|s| s.provenance.is_some());
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(writer);
    let mut header: Vec<&str> = CSV_HEADER.split(',').collect();
    if with_provenance {
        header.extend(PROVENANCE_COLUMNS);
    }
    w.write_record(&header).map_err(io_error)?;
    for sample in dataset {
        let mut row: Vec<String> = sample.features.to_array().iter().map(|v| v.to_string()).collect();
        row.push(sample.label.to_string());
        if with_provenance {
            let p = sample.provenance.clone().unwrap_or_default();
            for v in [p.hospital_id, p.lab_id, p.timestamp] {
                row.push(v.unwrap_or_default());
            }
        }
        w.write_record(&row).map_err(io_error)?;
    }
    w.flush()?;
    Ok(())
}

fn io_error(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_only_gives_empty_dataset() {
        let d = parse_dataset_csv("SD,GP,CAT,MAL,SC,label\n").unwrap();
        assert!(d.is_empty());
    }

    #[test]
    fn single_row_parses() {
        let d = parse_dataset_csv("SD,GP,CAT,MAL,SC,label\n1.0,2.0,3.0,4.0,5.0,HI").unwrap();
        assert_eq!(d.len(), 1);
        let s = &d.samples()[0];
        assert_eq!(s.label, OcdClass::Hi);
        assert_eq!(s.features.to_array(), [1.0, 2.0, 3.0, 4.0, 5.0]);
        assert!(s.provenance.is_none());
    }

    #[test]
    fn non_numeric_feature_names_line() {
        let err = parse_dataset_csv("SD,GP,CAT,MAL,SC,label\n1,2,3,4,5,GAI\n1.0,2.0,3.0,4.0,XYZ,HI\n").unwrap_err();
        match err {
            Error::Parse { line, message } => {
                assert_eq!(line, 3);
                assert!(message.contains("SC"), "{message}");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn wrong_column_count_and_unknown_label_are_rejected() {
        let e = parse_dataset_csv("SD,GP,CAT,MAL,SC,label\n1,2,3,4,HI\n").unwrap_err();
        assert!(matches!(e, Error::Parse { line: 2, .. }), "{e:?}");
        let e = parse_dataset_csv("SD,GP,CAT,MAL,SC,label\n1,2,3,4,5,XYZ\n").unwrap_err();
        assert!(matches!(e, Error::Parse { line: 2, .. }), "{e:?}");
        let e = parse_dataset_csv("SD,GP,CAT,MAL,SC,label\n1,2,3,4,nan,HI\n").unwrap_err();
        assert!(matches!(e, Error::Parse { line: 2, .. }), "{e:?}");
    }

    #[test]
    fn bad_header_is_rejected() {
        assert!(parse_dataset_csv("a,b,c\n").is_err());
        assert!(parse_dataset_csv("SD,GP,CAT,MAL,SC,label,extra\n").is_err());
        assert!(parse_dataset_csv("").is_err());
    }

    #[test]
    fn labels_are_case_insensitive_and_provenance_is_preserved() {
        let text = "SD,GP,CAT,MAL,SC,label,hospital_id,lab_id,timestamp\n\
                    1,2,3,4,5,oai,H1,,2024-01-01T00:00:00Z\n\
                    1,2,3,4,5,gai,,,\n";
        let d = parse_dataset_csv(text).unwrap();
        assert_eq!(d.labels(), vec![OcdClass::Oai, OcdClass::Gai]);
        let p = d.samples()[0].provenance.as_ref().unwrap();
        assert_eq!(p.hospital_id.as_deref(), Some("H1"));
        assert_eq!(p.lab_id, None);
        assert_eq!(p.timestamp.as_deref(), Some("2024-01-01T00:00:00Z"));
        assert!(d.samples()[1].provenance.is_none());

        let mut out = Vec::new();
        write_dataset_csv(&d, &mut out).unwrap();
        assert_eq!(parse_dataset_csv(std::str::from_utf8(&out).unwrap()).unwrap(), d);
    }
}
