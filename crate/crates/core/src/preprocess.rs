//! Turns indicator streams and engine predictions into per-move training rows.
//!
//! Samples are stamped with absolute time, grouped into half-open move
//! windows `[previous move, this move)` (the first window opens when the
//! indicator app starts), averaged, and differenced between consecutive
//! moves. Game-side features come from the engine's top-five list.

use std::fmt;
use std::str::FromStr;

use chrono::{NaiveDateTime, TimeDelta};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Upper end of the simulation-number domain.
pub const SN_MAX: f64 = 2048.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PreprocessError {
    #[error("sample {index} has negative elapsed time {t_ms} ms")]
    NegativeElapsed { index: usize, t_ms: i64 },
    #[error("move {move_number} is not played after the previous event")]
    UnorderedMoves { move_number: u32 },
    #[error("session has no moves")]
    NoMoves,
    #[error("move {move_number} has no indicator samples in its window")]
    FlaggedInput { move_number: u32 },
    #[error("no usable training records remain")]
    EmptyResult,
}

/// One indicator frame; values are on the device's 0..10 scale.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IndicatorSample {
    pub t_ms: i64,
    pub attention: f64,
    pub left_brain: f64,
    pub right_brain: f64,
    pub stress: f64,
    pub fatigue: f64,
}

impl IndicatorSample {
    pub fn values(&self) -> [f64; 5] {
        [
            self.attention,
            self.left_brain,
            self.right_brain,
            self.stress,
            self.fatigue,
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Color {
    Black,
    White,
}

impl Color {
    pub fn sgf(self) -> &'static str {
        match self {
            Color::Black => "B",
            Color::White => "W",
        }
    }
}

impl FromStr for Color {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "b" | "black" => Ok(Color::Black),
            "w" | "white" => Ok(Color::White),
            other => Err(format!("unknown color {other:?}")),
        }
    }
}

impl fmt::Display for Color {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.sgf())
    }
}

/// Side whose win probability the prediction records report.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Perspective {
    Black,
    Mover,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MoveEvent {
    pub move_number: u32,
    pub played_at: NaiveDateTime,
    pub color: Color,
    pub position: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SessionMeta {
    pub app_started_at: NaiveDateTime,
    pub board_size: u32,
    pub perspective: Perspective,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimedSample {
    pub at: NaiveDateTime,
    pub sample: IndicatorSample,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PerMoveIndicators {
    pub move_number: u32,
    pub attention: f64,
    pub left_brain: f64,
    pub right_brain: f64,
    pub stress: f64,
    pub fatigue: f64,
    /// Zero marks an empty window; such records cannot produce distances.
    pub sample_count: usize,
}

impl PerMoveIndicators {
    pub fn is_flagged(&self) -> bool {
        self.sample_count == 0
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MoveDistances {
    pub move_number: u32,
    pub ald: f64,
    pub bald: f64,
    pub sld: f64,
    pub fld: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub position: String,
    pub simulations: u64,
    pub win_rate: f64,
}

/// Engine candidates for one move, best first.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionRecord {
    pub move_number: u32,
    pub top_five: Vec<Candidate>,
}

/// One training row: six crisp inputs plus the desired win rate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MoveFeatureRecord {
    pub move_number: u32,
    pub ald: f64,
    pub bald: f64,
    pub sld: f64,
    pub fld: f64,
    pub sn: f64,
    pub tmr: f64,
    pub desired_output: f64,
}

impl MoveFeatureRecord {
    pub const INPUT_NAMES: [&'static str; 6] = ["ALD", "BALD", "SLD", "FLD", "SN", "TMR"];

    pub fn inputs(&self) -> [f64; 6] {
        [self.ald, self.bald, self.sld, self.fld, self.sn, self.tmr]
    }

    pub fn input(&self, variable: &str) -> Option<f64> {
        Self::INPUT_NAMES
            .iter()
            .position(|n| *n == variable)
            .map(|i| self.inputs()[i])
    }
}

pub fn absolute_timestamps(
    samples: &[IndicatorSample],
    meta: &SessionMeta,
) -> Result<Vec<TimedSample>, PreprocessError> {
    samples
        .iter()
        .enumerate()
        .map(|(index, s)| {
            if s.t_ms < 0 {
                return Err(PreprocessError::NegativeElapsed {
                    index,
                    t_ms: s.t_ms,
                });
            }
            Ok(TimedSample {
                at: meta.app_started_at + TimeDelta::milliseconds(s.t_ms),
                sample: *s,
            })
        })
        .collect()
}

fn check_move_order(moves: &[MoveEvent], meta: &SessionMeta) -> Result<(), PreprocessError> {
    if moves.is_empty() {
        return Err(PreprocessError::NoMoves);
    }
    let mut previous = meta.app_started_at;
    for (i, m) in moves.iter().enumerate() {
        let ordered = if i == 0 {
            m.played_at >= previous
        } else {
            m.played_at > previous
        };
        if !ordered {
            return Err(PreprocessError::UnorderedMoves {
                move_number: m.move_number,
            });
        }
        previous = m.played_at;
    }
    Ok(())
}

/// Index of the move whose window contains `at`, if any.
pub fn window_index(at: NaiveDateTime, moves: &[MoveEvent], meta: &SessionMeta) -> Option<usize> {
    if at < meta.app_started_at {
        return None;
    }
    let j = moves.partition_point(|m| m.played_at <= at);
    (j < moves.len()).then_some(j)
}

/// Mean of each indicator over every move window.
pub fn per_move_average(
    samples: &[TimedSample],
    moves: &[MoveEvent],
    meta: &SessionMeta,
) -> Result<Vec<PerMoveIndicators>, PreprocessError> {
    check_move_order(moves, meta)?;
    let mut sums = vec![[0.0f64; 5]; moves.len()];
    let mut counts = vec![0usize; moves.len()];
    for s in samples {
        if let Some(j) = window_index(s.at, moves, meta) {
            for (acc, v) in sums[j].iter_mut().zip(s.sample.values()) {
                *acc += v;
            }
            counts[j] += 1;
        }
    }
    Ok(moves
        .iter()
        .zip(sums.iter().zip(&counts))
        .map(|(m, (sum, &n))| {
            let mean = |k: usize| if n == 0 { 0.0 } else { sum[k] / n as f64 };
            PerMoveIndicators {
                move_number: m.move_number,
                attention: mean(0),
                left_brain: mean(1),
                right_brain: mean(2),
                stress: mean(3),
                fatigue: mean(4),
                sample_count: n,
            }
        })
        .collect())
}

fn distance(current: &PerMoveIndicators, previous: Option<&PerMoveIndicators>) -> MoveDistances {
    match previous {
        None => MoveDistances {
            move_number: current.move_number,
            ald: 0.0,
            bald: 0.0,
            sld: 0.0,
            fld: 0.0,
        },
        Some(p) => MoveDistances {
            move_number: current.move_number,
            ald: (current.attention - p.attention).abs(),
            bald: (current.left_brain - p.left_brain).abs(),
            sld: (current.stress - p.stress).abs(),
            fld: (current.fatigue - p.fatigue).abs(),
        },
    }
}

/// Absolute indicator change between consecutive moves; the first move's
/// distances are zero so the output has one row per move.
pub fn consecutive_distances(
    per_move: &[PerMoveIndicators],
) -> Result<Vec<MoveDistances>, PreprocessError> {
    if let Some(flagged) = per_move.iter().find(|p| p.is_flagged()) {
        return Err(PreprocessError::FlaggedInput {
            move_number: flagged.move_number,
        });
    }
    Ok(per_move
        .iter()
        .enumerate()
        .map(|(i, p)| distance(p, i.checked_sub(1).map(|j| &per_move[j])))
        .collect())
}

/// Like [`consecutive_distances`] but skips moves whose own window or the
/// previous one is empty instead of failing.
pub fn usable_distances(per_move: &[PerMoveIndicators]) -> Vec<MoveDistances> {
    per_move
        .iter()
        .enumerate()
        .filter_map(|(i, p)| {
            if p.is_flagged() {
                return None;
            }
            match i.checked_sub(1).map(|j| &per_move[j]) {
                Some(prev) if prev.is_flagged() => None,
                prev => Some(distance(p, prev)),
            }
        })
        .collect()
}

/// Top-move rate: 1 for the engine's first choice, the win-rate ratio to the
/// first choice for lower ranks, 0 when the move is not in the list.
pub fn compute_tmr(prediction: &PredictionRecord, actual_position: &str) -> f64 {
    let Some(top) = prediction.top_five.first() else {
        return 0.0;
    };
    match prediction
        .top_five
        .iter()
        .position(|c| c.position == actual_position)
    {
        Some(0) => 1.0,
        Some(k) => {
            if top.win_rate <= 0.0 {
                1.0
            } else {
                (prediction.top_five[k].win_rate / top.win_rate).clamp(0.0, 1.0)
            }
        }
        None => 0.0,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SkipReason {
    NoPrediction,
    EmptyPrediction,
    NoIndicators,
}

impl fmt::Display for SkipReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SkipReason::NoPrediction => "no prediction record",
            SkipReason::EmptyPrediction => "prediction record has no candidates",
            SkipReason::NoIndicators => "no usable indicator window",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingSet {
    pub records: Vec<MoveFeatureRecord>,
    pub skipped: Vec<(u32, SkipReason)>,
}

fn mover_view(
    prediction: &PredictionRecord,
    color: Color,
    perspective: Perspective,
) -> PredictionRecord {
    let flip = perspective == Perspective::Black && color == Color::White;
    if !flip {
        return prediction.clone();
    }
    PredictionRecord {
        move_number: prediction.move_number,
        top_five: prediction
            .top_five
            .iter()
            .map(|c| Candidate {
                win_rate: 1.0 - c.win_rate,
                ..c.clone()
            })
            .collect(),
    }
}

/// One record per `focus` move that has both distances and a prediction.
///
/// Win rates are converted to the mover's point of view before TMR and the
/// desired output are taken from them.
pub fn build_training_set(
    distances: &[MoveDistances],
    predictions: &[PredictionRecord],
    moves: &[MoveEvent],
    focus: Color,
    perspective: Perspective,
) -> Result<TrainingSet, PreprocessError> {
    let mut records = Vec::new();
    let mut skipped = Vec::new();
    for m in moves.iter().filter(|m| m.color == focus) {
        let mut skip = |reason: SkipReason| {
            log::warn!("move {} excluded: {reason}", m.move_number);
            skipped.push((m.move_number, reason));
        };
        let Some(d) = distances.iter().find(|d| d.move_number == m.move_number) else {
            skip(SkipReason::NoIndicators);
            continue;
        };
        let Some(p) = predictions.iter().find(|p| p.move_number == m.move_number) else {
            skip(SkipReason::NoPrediction);
            continue;
        };
        if p.top_five.is_empty() {
            skip(SkipReason::EmptyPrediction);
            continue;
        }
        let p = mover_view(p, m.color, perspective);
        let top = &p.top_five[0];
        records.push(MoveFeatureRecord {
            move_number: m.move_number,
            ald: d.ald,
            bald: d.bald,
            sld: d.sld,
            fld: d.fld,
            sn: (top.simulations as f64).min(SN_MAX),
            tmr: compute_tmr(&p, &m.position),
            desired_output: top.win_rate.clamp(0.0, 1.0),
        });
    }
    if records.is_empty() {
        return Err(PreprocessError::EmptyResult);
    }
    Ok(TrainingSet { records, skipped })
}

/// Whole pipeline for one session.
pub fn training_set_for_session(
    meta: &SessionMeta,
    samples: &[IndicatorSample],
    moves: &[MoveEvent],
    predictions: &[PredictionRecord],
    focus: Color,
) -> Result<TrainingSet, PreprocessError> {
    let timed = absolute_timestamps(samples, meta)?;
    let per_move = per_move_average(&timed, moves, meta)?;
    let distances = usable_distances(&per_move);
    build_training_set(&distances, predictions, moves, focus, meta.perspective)
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::NaiveDate;
    use proptest::prelude::*;

    fn start() -> NaiveDateTime {
        NaiveDate::from_ymd_opt(2019, 1, 1)
            .unwrap()
            .and_hms_milli_opt(0, 0, 0, 0)
            .unwrap()
    }

    fn meta() -> SessionMeta {
        SessionMeta {
            app_started_at: start(),
            board_size: 19,
            perspective: Perspective::Mover,
        }
    }

    fn sample(t_ms: i64, v: f64) -> IndicatorSample {
        IndicatorSample {
            t_ms,
            attention: v,
            left_brain: v,
            right_brain: v,
            stress: v,
            fatigue: v,
        }
    }

    fn mv(n: u32, at_ms: i64, color: Color, pos: &str) -> MoveEvent {
        MoveEvent {
            move_number: n,
            played_at: start() + TimeDelta::milliseconds(at_ms),
            color,
            position: pos.into(),
        }
    }

    fn indicators(n: u32, attention: f64, left_brain: f64) -> PerMoveIndicators {
        PerMoveIndicators {
            move_number: n,
            attention,
            left_brain,
            right_brain: 0.0,
            stress: 0.0,
            fatigue: 0.0,
            sample_count: 1,
        }
    }

    fn cand(pos: &str, sims: u64, wr: f64) -> Candidate {
        Candidate {
            position: pos.into(),
            simulations: sims,
            win_rate: wr,
        }
    }

    #[test]
    fn timestamps_offset_from_start() {
        let t = absolute_timestamps(&[sample(1500, 1.0), sample(0, 1.0)], &meta()).unwrap();
        assert_eq!(
            t[0].at.format("%Y-%m-%dT%H:%M:%S%.3f").to_string(),
            "2019-01-01T00:00:01.500"
        );
        assert_eq!(t[1].at, start());
        assert_eq!(
            absolute_timestamps(&[sample(-5, 1.0)], &meta()),
            Err(PreprocessError::NegativeElapsed { index: 0, t_ms: -5 })
        );
    }

    #[test]
    fn window_means() {
        let moves = [
            mv(1, 1000, Color::Black, "pd"),
            mv(2, 2000, Color::White, "dp"),
            mv(3, 3000, Color::Black, "pp"),
        ];
        let samples = [
            sample(100, 4.0),
            sample(900, 6.0),
            sample(1000, 7.2),
            sample(3000, 9.0),
        ];
        let timed = absolute_timestamps(&samples, &meta()).unwrap();
        let avg = per_move_average(&timed, &moves, &meta()).unwrap();
        assert_eq!(avg.len(), 3);
        assert_eq!(avg[0].attention, 5.0);
        assert_eq!(avg[0].sample_count, 2);
        // a sample exactly at a move time belongs to the next window
        assert_eq!(avg[1].attention, 7.2);
        assert!(avg[2].is_flagged());
    }

    #[test]
    fn unordered_moves_rejected() {
        let moves = [
            mv(1, 1000, Color::Black, "pd"),
            mv(2, 1000, Color::White, "dp"),
        ];
        assert_eq!(
            per_move_average(&[], &moves, &meta()),
            Err(PreprocessError::UnorderedMoves { move_number: 2 })
        );
        assert_eq!(
            per_move_average(&[], &[], &meta()),
            Err(PreprocessError::NoMoves)
        );
    }

    #[test]
    fn distances() {
        let d = consecutive_distances(&[
            indicators(1, 5.0, 2.0),
            indicators(2, 3.5, 6.0),
            indicators(3, 3.5, 5.0),
        ])
        .unwrap();
        assert_eq!(
            d.iter().map(|d| d.ald).collect::<Vec<_>>(),
            vec![0.0, 1.5, 0.0]
        );
        assert_eq!(
            d.iter().map(|d| d.bald).collect::<Vec<_>>(),
            vec![0.0, 4.0, 1.0]
        );

        let mut flagged = indicators(2, 1.0, 1.0);
        flagged.sample_count = 0;
        let input = [
            indicators(1, 1.0, 1.0),
            flagged,
            indicators(3, 2.0, 2.0),
            indicators(4, 4.0, 4.0),
        ];
        assert_eq!(
            consecutive_distances(&input),
            Err(PreprocessError::FlaggedInput { move_number: 2 })
        );
        let usable: Vec<u32> = usable_distances(&input)
            .iter()
            .map(|d| d.move_number)
            .collect();
        assert_eq!(usable, vec![1, 4]);
    }

    #[test]
    fn tmr_rules() {
        let p = PredictionRecord {
            move_number: 1,
            top_five: vec![
                cand("pd", 900, 0.60),
                cand("dd", 50, 0.58),
                cand("pp", 30, 0.54),
            ],
        };
        assert_eq!(compute_tmr(&p, "pd"), 1.0);
        assert_eq!(compute_tmr(&p, "qq"), 0.0);
        assert!((compute_tmr(&p, "pp") - 0.9).abs() < 1e-12);
    }

    #[test]
    fn training_rows() {
        let moves = [
            mv(1, 1000, Color::Black, "pd"),
            mv(2, 2000, Color::White, "dp"),
            mv(3, 3000, Color::Black, "pp"),
            mv(4, 4000, Color::White, "dd"),
            mv(5, 5000, Color::Black, "qd"),
        ];
        let dists: Vec<MoveDistances> = (1..=5)
            .map(|n| MoveDistances {
                move_number: n,
                ald: 0.1,
                bald: 0.2,
                sld: 0.3,
                fld: 0.4,
            })
            .collect();
        let preds = vec![
            PredictionRecord {
                move_number: 1,
                top_five: vec![cand("pd", 4096, 0.52)],
            },
            PredictionRecord {
                move_number: 2,
                top_five: vec![cand("dp", 100, 0.4)],
            },
            PredictionRecord {
                move_number: 5,
                top_five: vec![cand("pd", 300, 0.61), cand("qd", 10, 0.305)],
            },
        ];
        let set =
            build_training_set(&dists, &preds, &moves, Color::Black, Perspective::Mover).unwrap();
        assert_eq!(set.records.len(), 2);
        assert_eq!(set.skipped, vec![(3, SkipReason::NoPrediction)]);
        assert_eq!(set.records[0].sn, 2048.0);
        assert_eq!(set.records[0].tmr, 1.0);
        assert_eq!(set.records[0].desired_output, 0.52);
        assert!((set.records[1].tmr - 0.5).abs() < 1e-12);

        let white =
            build_training_set(&dists, &preds, &moves, Color::White, Perspective::Black).unwrap();
        assert!((white.records[0].desired_output - 0.6).abs() < 1e-12);
        assert_eq!(white.skipped, vec![(4, SkipReason::NoPrediction)]);

        assert_eq!(
            build_training_set(&dists, &[], &moves, Color::Black, Perspective::Mover),
            Err(PreprocessError::EmptyResult)
        );
    }

    proptest! {
        #[test]
        fn tmr_monotone_in_chosen_rate(top in 0.01f64..1.0, a in 0.0f64..1.0, b in 0.0f64..1.0) {
            let rec = |wr: f64| PredictionRecord {
                move_number: 1,
                top_five: vec![cand("aa", 10, top), cand("bb", 5, wr)],
            };
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            prop_assert!(compute_tmr(&rec(lo), "bb") <= compute_tmr(&rec(hi), "bb"));
        }

        #[test]
        fn means_bounded_by_window(values in prop::collection::vec(0.0f64..10.0, 1..40)) {
            let samples: Vec<_> = values.iter().enumerate().map(|(i, v)| sample(i as i64 * 10, *v)).collect();
            let moves = [mv(1, 10_000, Color::Black, "aa")];
            let timed = absolute_timestamps(&samples, &meta()).unwrap();
            let avg = per_move_average(&timed, &moves, &meta()).unwrap();
            let lo = values.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            prop_assert!(avg[0].attention >= lo - 1e-12 && avg[0].attention <= hi + 1e-12);
        }
    }
}
