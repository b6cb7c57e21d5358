use std::collections::HashSet;
use std::path::Path;

use chrono::NaiveDateTime;
use serde::{Deserialize, Serialize};

use super::{read_file, write_file, DataError};
use crate::preprocess::{
    Candidate, Color, IndicatorSample, MoveEvent, Perspective, PredictionRecord, SessionMeta,
};

pub const META_FILE: &str = "meta.json";
pub const BCI_FILE: &str = "bci.csv";
pub const MOVES_FILE: &str = "moves.csv";
pub const PREDICTIONS_FILE: &str = "predictions.json";

pub const BCI_HEADER: [&str; 6] = [
    "t_ms",
    "attention",
    "left_brain",
    "right_brain",
    "stress",
    "fatigue",
];
pub const MOVES_HEADER: [&str; 4] = ["move", "played_at", "color", "position"];

const DATETIME_FORMAT: &str = "%Y-%m-%dT%H:%M:%S%.3f";

/// Everything recorded for one game.
#[derive(Debug, Clone, PartialEq)]
pub struct SessionBundle {
    pub meta: SessionMeta,
    pub samples: Vec<IndicatorSample>,
    pub moves: Vec<MoveEvent>,
    pub predictions: Vec<PredictionRecord>,
}

pub fn format_datetime(at: &NaiveDateTime) -> String {
    at.format(DATETIME_FORMAT).to_string()
}

pub fn parse_datetime(raw: &str) -> Option<NaiveDateTime> {
    let raw = raw.trim();
    NaiveDateTime::parse_from_str(raw, "%Y-%m-%dT%H:%M:%S%.f").ok()
}

/// Two lowercase letters within the board, or the empty string / `tt` for a pass.
pub fn is_valid_sgf_point(point: &str, board_size: u32) -> bool {
    if point.is_empty() || (point == "tt" && board_size <= 19) {
        return true;
    }
    let bytes = point.as_bytes();
    let on_board = |b: u8| b.is_ascii_lowercase() && u32::from(b - b'a') < board_size;
    bytes.len() == 2 && on_board(bytes[0]) && on_board(bytes[1])
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MetaFile {
    app_started_at: String,
    board_size: u32,
    perspective: Perspective,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PredictionEntry {
    #[serde(rename = "move")]
    move_number: u32,
    top5: Vec<CandidateEntry>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CandidateEntry {
    position: String,
    simulations: u64,
    win_rate: f64,
}

fn csv_reader(text: &str) -> csv::Reader<&[u8]> {
    csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes())
}

/// Reads every row; checks the header matches exactly.
fn csv_rows(
    file: &str,
    text: &str,
    header: &[&str],
) -> Result<Vec<(usize, csv::StringRecord)>, DataError> {
    let mut reader = csv_reader(text);
    let mut records = reader.records();
    let first = match records.next() {
        Some(r) => r.map_err(|e| DataError::schema(file, e.to_string()))?,
        None => return Err(DataError::schema(file, "file is empty")),
    };
    if first.iter().collect::<Vec<_>>() != header {
        return Err(DataError::schema(
            file,
            format!(
                "expected header {:?}, found {:?}",
                header.join(","),
                first.iter().collect::<Vec<_>>().join(",")
            ),
        ));
    }
    let mut out = Vec::new();
    for record in records {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line() as usize);
            DataError::range(file, line, e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        if record.len() != header.len() {
            return Err(DataError::range(
                file,
                line,
                format!("expected {} fields", header.len()),
            ));
        }
        out.push((line, record));
    }
    Ok(out)
}

fn field<T: std::str::FromStr>(
    file: &str,
    line: usize,
    record: &csv::StringRecord,
    i: usize,
    name: &str,
) -> Result<T, DataError> {
    record[i].parse().map_err(|_| {
        DataError::range(
            file,
            line,
            format!("cannot parse {name} from {:?}", &record[i]),
        )
    })
}

fn parse_meta(text: &str) -> Result<SessionMeta, DataError> {
    let raw: MetaFile =
        serde_json::from_str(text).map_err(|e| DataError::schema(META_FILE, e.to_string()))?;
    let app_started_at = parse_datetime(&raw.app_started_at).ok_or_else(|| {
        DataError::schema(
            META_FILE,
            format!("bad app_started_at {:?}", raw.app_started_at),
        )
    })?;
    if !(2..=25).contains(&raw.board_size) {
        return Err(DataError::schema(
            META_FILE,
            format!("board_size {} outside 2..=25", raw.board_size),
        ));
    }
    Ok(SessionMeta {
        app_started_at,
        board_size: raw.board_size,
        perspective: raw.perspective,
    })
}

fn parse_samples(text: &str) -> Result<Vec<IndicatorSample>, DataError> {
    let mut samples: Vec<IndicatorSample> = Vec::new();
    for (line, r) in csv_rows(BCI_FILE, text, &BCI_HEADER)? {
        let t_ms: i64 = field(BCI_FILE, line, &r, 0, "t_ms")?;
        if t_ms < 0 {
            return Err(DataError::range(
                BCI_FILE,
                line,
                format!("negative elapsed time {t_ms}"),
            ));
        }
        let mut values = [0.0; 5];
        for (k, v) in values.iter_mut().enumerate() {
            *v = field(BCI_FILE, line, &r, k + 1, BCI_HEADER[k + 1])?;
            if !(0.0..=10.0).contains(v) {
                return Err(DataError::range(
                    BCI_FILE,
                    line,
                    format!("{} = {} outside [0, 10]", BCI_HEADER[k + 1], v),
                ));
            }
        }
        if samples.last().is_some_and(|s| s.t_ms > t_ms) {
            return Err(DataError::range(
                BCI_FILE,
                line,
                "samples are not sorted by t_ms",
            ));
        }
        samples.push(IndicatorSample {
            t_ms,
            attention: values[0],
            left_brain: values[1],
            right_brain: values[2],
            stress: values[3],
            fatigue: values[4],
        });
    }
    Ok(samples)
}

fn parse_moves(text: &str, meta: &SessionMeta) -> Result<Vec<MoveEvent>, DataError> {
    let mut moves: Vec<MoveEvent> = Vec::new();
    for (line, r) in csv_rows(MOVES_FILE, text, &MOVES_HEADER)? {
        let move_number: u32 = field(MOVES_FILE, line, &r, 0, "move")?;
        if move_number as usize != moves.len() + 1 {
            return Err(DataError::range(
                MOVES_FILE,
                line,
                format!("expected move {}, found {move_number}", moves.len() + 1),
            ));
        }
        let played_at = parse_datetime(&r[1]).ok_or_else(|| {
            DataError::range(MOVES_FILE, line, format!("bad played_at {:?}", &r[1]))
        })?;
        let previous = moves.last().map(|m| m.played_at);
        let ordered = match previous {
            Some(p) => played_at > p,
            None => played_at >= meta.app_started_at,
        };
        if !ordered {
            return Err(DataError::range(
                MOVES_FILE,
                line,
                "played_at is not after the previous event",
            ));
        }
        let color: Color = r[2]
            .parse()
            .map_err(|e: String| DataError::range(MOVES_FILE, line, e))?;
        let position = r[3].to_string();
        if !is_valid_sgf_point(&position, meta.board_size) {
            return Err(DataError::range(
                MOVES_FILE,
                line,
                format!("bad board coordinate {position:?}"),
            ));
        }
        moves.push(MoveEvent {
            move_number,
            played_at,
            color,
            position,
        });
    }
    Ok(moves)
}

fn parse_predictions(text: &str) -> Result<Vec<PredictionRecord>, DataError> {
    let raw: Vec<PredictionEntry> = serde_json::from_str(text)
        .map_err(|e| DataError::schema(PREDICTIONS_FILE, e.to_string()))?;
    Ok(raw
        .into_iter()
        .map(|p| PredictionRecord {
            move_number: p.move_number,
            top_five: p
                .top5
                .into_iter()
                .map(|c| Candidate {
                    position: c.position,
                    simulations: c.simulations,
                    win_rate: c.win_rate,
                })
                .collect(),
        })
        .collect())
}

/// Cross-file checks that cannot be done row by row.
pub fn validate_bundle(bundle: &SessionBundle) -> Result<(), DataError> {
    let known: HashSet<u32> = bundle.moves.iter().map(|m| m.move_number).collect();
    let mut seen = HashSet::new();
    for p in &bundle.predictions {
        let fail = |message: String| Err(DataError::schema(PREDICTIONS_FILE, message));
        if !known.contains(&p.move_number) {
            return fail(format!(
                "prediction for move {} which is not in {MOVES_FILE}",
                p.move_number
            ));
        }
        if !seen.insert(p.move_number) {
            return fail(format!(
                "move {} has more than one prediction",
                p.move_number
            ));
        }
        if p.top_five.len() > 5 {
            return fail(format!(
                "move {} lists {} candidates (at most 5)",
                p.move_number,
                p.top_five.len()
            ));
        }
        for c in &p.top_five {
            if !(0.0..=1.0).contains(&c.win_rate) {
                return fail(format!(
                    "move {}: win_rate {} outside [0, 1]",
                    p.move_number, c.win_rate
                ));
            }
            if !is_valid_sgf_point(&c.position, bundle.meta.board_size) {
                return fail(format!(
                    "move {}: bad board coordinate {:?}",
                    p.move_number, c.position
                ));
            }
        }
    }
    Ok(())
}

pub fn load_session(dir: &Path) -> Result<SessionBundle, DataError> {
    // check presence first so a missing file is reported as such
    for name in [META_FILE, BCI_FILE, MOVES_FILE, PREDICTIONS_FILE] {
        if !dir.join(name).is_file() {
            return Err(DataError::MissingFile(dir.join(name)));
        }
    }
    let meta = parse_meta(&read_file(&dir.join(META_FILE))?)?;
    let samples = parse_samples(&read_file(&dir.join(BCI_FILE))?)?;
    let moves = parse_moves(&read_file(&dir.join(MOVES_FILE))?, &meta)?;
    let predictions = parse_predictions(&read_file(&dir.join(PREDICTIONS_FILE))?)?;
    let bundle = SessionBundle {
        meta,
        samples,
        moves,
        predictions,
    };
    validate_bundle(&bundle)?;
    Ok(bundle)
}

fn csv_text(header: &[&str], rows: impl Iterator<Item = Vec<String>>) -> Result<String, DataError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let to_err = |e: csv::Error| DataError::Invalid(e.to_string());
    w.write_record(header).map_err(to_err)?;
    for row in rows {
        w.write_record(&row).map_err(to_err)?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| DataError::Invalid(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

pub fn write_session(bundle: &SessionBundle, dir: &Path) -> Result<(), DataError> {
    std::fs::create_dir_all(dir).map_err(|source| DataError::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    let meta = MetaFile {
        app_started_at: format_datetime(&bundle.meta.app_started_at),
        board_size: bundle.meta.board_size,
        perspective: bundle.meta.perspective,
    };
    write_file(&dir.join(META_FILE), &pretty_json(&meta))?;

    let bci = csv_text(
        &BCI_HEADER,
        bundle.samples.iter().map(|s| {
            std::iter::once(s.t_ms.to_string())
                .chain(s.values().iter().map(|v| v.to_string()))
                .collect()
        }),
    )?;
    write_file(&dir.join(BCI_FILE), &bci)?;

    let moves = csv_text(
        &MOVES_HEADER,
        bundle.moves.iter().map(|m| {
            vec![
                m.move_number.to_string(),
                format_datetime(&m.played_at),
                m.color.sgf().to_string(),
                m.position.clone(),
            ]
        }),
    )?;
    write_file(&dir.join(MOVES_FILE), &moves)?;

    let predictions: Vec<PredictionEntry> = bundle
        .predictions
        .iter()
        .map(|p| PredictionEntry {
            move_number: p.move_number,
            top5: p
                .top_five
                .iter()
                .map(|c| CandidateEntry {
                    position: c.position.clone(),
                    simulations: c.simulations,
                    win_rate: c.win_rate,
                })
                .collect(),
        })
        .collect();
    write_file(&dir.join(PREDICTIONS_FILE), &pretty_json(&predictions))
}

pub(crate) fn pretty_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("plain data serializes");
    s.push('\n');
    s
}
