use std::path::Path;

use super::{read_file, write_file, DataError};
use crate::fml::KNOWN_DOMAINS;
use crate::preprocess::MoveFeatureRecord;

pub const TRAINING_HEADER: [&str; 8] = ["move", "ALD", "BALD", "SLD", "FLD", "SN", "TMR", "DO"];
pub const HISTORY_HEADER: [&str; 2] = ["generation", "gbest_fitness"];

fn file_label(path: &Path) -> String {
    path.file_name().map_or_else(
        || path.display().to_string(),
        |n| n.to_string_lossy().into_owned(),
    )
}

fn rows(path: &Path, header: &[&str]) -> Result<Vec<(usize, csv::StringRecord)>, DataError> {
    let text = read_file(path)?;
    let file = file_label(path);
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut out = Vec::new();
    let mut first = true;
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line() as usize);
            DataError::range(&file, line, e.to_string())
        })?;
        if first {
            if record.iter().ne(header.iter().copied()) {
                return Err(DataError::schema(
                    &file,
                    format!("expected header {}", header.join(",")),
                ));
            }
            first = false;
            continue;
        }
        let line = record.position().map_or(0, |p| p.line() as usize);
        if record.len() != header.len() {
            return Err(DataError::range(
                &file,
                line,
                format!("expected {} fields", header.len()),
            ));
        }
        out.push((line, record));
    }
    if first {
        return Err(DataError::schema(&file, "file is empty"));
    }
    Ok(out)
}

fn write_rows(
    path: &Path,
    header: &[&str],
    rows: impl Iterator<Item = Vec<String>>,
) -> Result<(), DataError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let to_err = |e: csv::Error| DataError::Invalid(e.to_string());
    w.write_record(header).map_err(to_err)?;
    for row in rows {
        w.write_record(&row).map_err(to_err)?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| DataError::Invalid(e.to_string()))?;
    write_file(
        path,
        &String::from_utf8(bytes).expect("csv output is utf-8"),
    )
}

fn domain(name: &str) -> (f64, f64) {
    let name = if name == "DO" { "WR" } else { name };
    KNOWN_DOMAINS
        .iter()
        .find(|(n, _, _)| *n == name)
        .map(|&(_, lo, hi)| (lo, hi))
        .expect("every training column has a known domain")
}

/// Reads a training table; every value must lie in its variable's domain.
pub fn read_training_set(path: &Path) -> Result<Vec<MoveFeatureRecord>, DataError> {
    let file = file_label(path);
    let mut records = Vec::new();
    for (line, r) in rows(path, &TRAINING_HEADER)? {
        let move_number: u32 = r[0]
            .parse()
            .map_err(|_| DataError::range(&file, line, format!("bad move number {:?}", &r[0])))?;
        let mut v = [0.0; 7];
        for (k, slot) in v.iter_mut().enumerate() {
            let name = TRAINING_HEADER[k + 1];
            let x: f64 = r[k + 1].parse().map_err(|_| {
                DataError::range(&file, line, format!("bad {name} value {:?}", &r[k + 1]))
            })?;
            let (lo, hi) = domain(name);
            if !(lo..=hi).contains(&x) {
                return Err(DataError::range(
                    &file,
                    line,
                    format!("{name} = {x} outside [{lo}, {hi}]"),
                ));
            }
            *slot = x;
        }
        records.push(MoveFeatureRecord {
            move_number,
            ald: v[0],
            bald: v[1],
            sld: v[2],
            fld: v[3],
            sn: v[4],
            tmr: v[5],
            desired_output: v[6],
        });
    }
    Ok(records)
}

pub fn write_training_set(path: &Path, records: &[MoveFeatureRecord]) -> Result<(), DataError> {
    write_rows(
        path,
        &TRAINING_HEADER,
        records.iter().map(|r| {
            std::iter::once(r.move_number.to_string())
                .chain(r.inputs().iter().map(|x| x.to_string()))
                .chain(std::iter::once(r.desired_output.to_string()))
                .collect()
        }),
    )
}

/// Global-best fitness per generation, starting at generation 0.
pub fn write_history(path: &Path, history: &[f64]) -> Result<(), DataError> {
    write_rows(
        path,
        &HISTORY_HEADER,
        history
            .iter()
            .enumerate()
            .map(|(g, f)| vec![g.to_string(), f.to_string()]),
    )
}

pub fn read_history(path: &Path) -> Result<Vec<f64>, DataError> {
    let file = file_label(path);
    let mut history = Vec::new();
    for (line, r) in rows(path, &HISTORY_HEADER)? {
        let generation: usize = r[0]
            .parse()
            .map_err(|_| DataError::range(&file, line, format!("bad generation {:?}", &r[0])))?;
        if generation != history.len() {
            return Err(DataError::range(
                &file,
                line,
                format!("expected generation {}", history.len()),
            ));
        }
        let f: f64 = r[1]
            .parse()
            .map_err(|_| DataError::range(&file, line, format!("bad fitness {:?}", &r[1])))?;
        history.push(f);
    }
    Ok(history)
}
