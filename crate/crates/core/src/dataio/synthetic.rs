use chrono::{NaiveDate, TimeDelta};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{DataError, SessionBundle};
use crate::fml::FuzzyController;
use crate::inference::{Engine, InferenceError};
use crate::preprocess::{
    absolute_timestamps, per_move_average, usable_distances, Candidate, Color, IndicatorSample,
    MoveEvent, Perspective, PredictionRecord, SessionMeta, SN_MAX,
};

const BOARD_SIZE: u32 = 19;
const THINK_MS: (i64, i64) = (4_000, 30_000);
const STEP: f64 = 0.6;
const JUMP_PROBABILITY: f64 = 0.08;
const JUMP: (f64, f64) = (1.0, 4.0);
const RANK_ONE_PROBABILITY: f64 = 0.45;
const LOWER_RANK_PROBABILITY: f64 = 0.35;
const MIN_SIMULATIONS: f64 = 32.0;
const FALLBACK_WIN_RATE: f64 = 0.5;

fn round2(x: f64) -> f64 {
    (x * 100.0).round() / 100.0
}

fn point(index: u32) -> String {
    let col = (b'a' + (index % BOARD_SIZE) as u8) as char;
    let row = (b'a' + (index / BOARD_SIZE) as u8) as char;
    format!("{col}{row}")
}

fn walk(rng: &mut ChaCha8Rng, level: &mut [f64; 5]) -> [f64; 5] {
    for v in level.iter_mut() {
        *v += rng.gen_range(-STEP..=STEP);
        if rng.gen_bool(JUMP_PROBABILITY) {
            let size = rng.gen_range(JUMP.0..JUMP.1);
            *v += if rng.gen_bool(0.5) { size } else { -size };
        }
        *v = v.clamp(0.0, 10.0);
    }
    level.map(round2)
}

/// A complete session whose rank-1 win rates are what `hidden` infers from
/// the session's own features.
///
/// Everything is drawn from a ChaCha8 stream seeded with `seed`, so equal
/// arguments give equal bundles. Win rates are from the mover's side.
pub fn generate_synthetic_session(
    seed: u64,
    move_count: usize,
    samples_per_move: usize,
    hidden: &FuzzyController,
) -> Result<SessionBundle, DataError> {
    let engine =
        Engine::new(hidden).map_err(|e| DataError::Invalid(format!("hidden controller: {e}")))?;
    if move_count < 2 || move_count > (BOARD_SIZE * BOARD_SIZE) as usize {
        return Err(DataError::Invalid(format!(
            "move count {move_count} outside 2..={}",
            BOARD_SIZE * BOARD_SIZE
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let meta = SessionMeta {
        app_started_at: NaiveDate::from_ymd_opt(2019, 1, 1)
            .and_then(|d| d.and_hms_milli_opt(9, 0, 0, 0))
            .expect("fixed start time is valid"),
        board_size: BOARD_SIZE,
        perspective: Perspective::Mover,
    };

    let mut order: Vec<u32> = (0..BOARD_SIZE * BOARD_SIZE).collect();
    order.shuffle(&mut rng);

    let mut level = [0.0; 5];
    for v in level.iter_mut() {
        *v = rng.gen_range(3.0..7.0);
    }
    let mut samples = Vec::with_capacity(move_count * samples_per_move);
    let mut moves = Vec::with_capacity(move_count);
    let mut window_start = 0i64;
    for (k, &cell) in order.iter().take(move_count).enumerate() {
        let played_ms = window_start + rng.gen_range(THINK_MS.0..=THINK_MS.1);
        let mut offsets: Vec<i64> = (0..samples_per_move)
            .map(|_| rng.gen_range(window_start..played_ms))
            .collect();
        offsets.sort_unstable();
        for t_ms in offsets {
            let [attention, left_brain, right_brain, stress, fatigue] = walk(&mut rng, &mut level);
            samples.push(IndicatorSample {
                t_ms,
                attention,
                left_brain,
                right_brain,
                stress,
                fatigue,
            });
        }
        moves.push(MoveEvent {
            move_number: k as u32 + 1,
            played_at: meta.app_started_at + TimeDelta::milliseconds(played_ms),
            color: if k % 2 == 0 {
                Color::Black
            } else {
                Color::White
            },
            position: point(cell),
        });
        window_start = played_ms;
    }

    let timed =
        absolute_timestamps(&samples, &meta).map_err(|e| DataError::Invalid(e.to_string()))?;
    let per_move =
        per_move_average(&timed, &moves, &meta).map_err(|e| DataError::Invalid(e.to_string()))?;
    let distances = usable_distances(&per_move);

    let mut predictions = Vec::with_capacity(move_count);
    for m in &moves {
        let simulations = (rng.gen_range(MIN_SIMULATIONS.ln()..=SN_MAX.ln()))
            .exp()
            .round() as u64;
        let mut ratios = [1.0f64; 5];
        for r in ratios.iter_mut().skip(1) {
            *r = rng.gen_range(0.7..1.0);
        }
        ratios[1..].sort_unstable_by(|a, b| b.total_cmp(a));
        let draw: f64 = rng.gen();
        let actual_rank = if draw < RANK_ONE_PROBABILITY {
            Some(0)
        } else if draw < RANK_ONE_PROBABILITY + LOWER_RANK_PROBABILITY {
            Some(rng.gen_range(1..5))
        } else {
            None
        };
        let tmr = actual_rank.map_or(0.0, |r| ratios[r]);

        let win_rate = match distances.iter().find(|d| d.move_number == m.move_number) {
            Some(d) => {
                let values = [
                    d.ald,
                    d.bald,
                    d.sld,
                    d.fld,
                    (simulations as f64).min(SN_MAX),
                    tmr,
                ];
                match engine.crisp(&values) {
                    Ok(wr) => wr,
                    Err(InferenceError::NoRuleFired) => FALLBACK_WIN_RATE,
                    Err(e) => {
                        return Err(DataError::Invalid(format!("move {}: {e}", m.move_number)))
                    }
                }
            }
            None => FALLBACK_WIN_RATE,
        };

        let mut rest: Vec<String> = Vec::with_capacity(5);
        while rest.len() < 5 {
            let candidate = point(rng.gen_range(0..BOARD_SIZE * BOARD_SIZE));
            if candidate != m.position && !rest.contains(&candidate) {
                rest.push(candidate);
            }
        }
        let top_five = (0..5)
            .map(|rank| Candidate {
                position: if actual_rank == Some(rank) {
                    m.position.clone()
                } else {
                    rest[rank].clone()
                },
                simulations: if rank == 0 {
                    simulations
                } else {
                    ((simulations as f64) * ratios[rank] / (rank as f64 + 1.0)).round() as u64
                },
                win_rate: ratios[rank] * win_rate,
            })
            .collect();
        predictions.push(PredictionRecord {
            move_number: m.move_number,
            top_five,
        });
    }

    Ok(SessionBundle {
        meta,
        samples,
        moves,
        predictions,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataio::validate_bundle;
    use crate::fixtures::expert_controller;
    use crate::preprocess::training_set_for_session;

    #[test]
    fn deterministic_and_valid() {
        let hidden = expert_controller();
        let a = generate_synthetic_session(7, 40, 6, &hidden).unwrap();
        let b = generate_synthetic_session(7, 40, 6, &hidden).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, generate_synthetic_session(8, 40, 6, &hidden).unwrap());
        validate_bundle(&a).unwrap();
        assert_eq!(a.moves.len(), 40);
        assert_eq!(a.samples.len(), 240);
        assert!(a.samples.windows(2).all(|w| w[0].t_ms <= w[1].t_ms));
    }

    #[test]
    fn desired_output_is_hidden_inference() {
        let hidden = expert_controller();
        let bundle = generate_synthetic_session(3, 30, 5, &hidden).unwrap();
        let set = training_set_for_session(
            &bundle.meta,
            &bundle.samples,
            &bundle.moves,
            &bundle.predictions,
            Color::Black,
        )
        .unwrap();
        let engine = Engine::new(&hidden).unwrap();
        for r in &set.records {
            let wr = engine.crisp(&r.inputs()).unwrap_or(FALLBACK_WIN_RATE);
            assert!(
                (wr - r.desired_output).abs() < 1e-9,
                "move {}",
                r.move_number
            );
        }
    }
}
