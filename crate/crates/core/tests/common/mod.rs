//! Generators and independent oracles shared by the integration and
//! acceptance tests.
#![allow(dead_code)]

use chrono::{NaiveDate, NaiveDateTime, TimeDelta};
use pfml::fml::{
    Clause, Connector, FuzzyController, FuzzyTerm, FuzzyVariable, Operator, Rule, RuleBase,
    TrapezoidShape, VarType,
};
use pfml::preprocess::{
    Color, IndicatorSample, MoveEvent, MoveFeatureRecord, PerMoveIndicators, Perspective,
    SessionMeta,
};
use rand::Rng;

const NAMES: [&str; 8] = [
    "ALD",
    "x",
    "Stress & Co",
    "<in>",
    "q\"uote",
    "long_variable_name",
    "Ω",
    "v'1",
];

fn real(rng: &mut impl Rng) -> f64 {
    match rng.gen_range(0..4) {
        0 => rng.gen_range(-1000.0..1000.0),
        1 => rng.gen_range(-10i32..10) as f64 / 4.0,
        2 => rng.gen::<f64>() * 1e-7,
        _ => rng.gen::<f64>(),
    }
}

fn extras(rng: &mut impl Rng, prefix: &str) -> Vec<(String, String)> {
    (0..rng.gen_range(0..3))
        .map(|i| {
            (
                format!("{prefix}{i}"),
                format!("v<{}>&\"{}\"", i, rng.gen::<u16>()),
            )
        })
        .collect()
}

/// A random structurally well-formed controller with awkward names and values.
pub fn random_controller(rng: &mut impl Rng) -> FuzzyController {
    let n_vars = rng.gen_range(1..6);
    let mut kb = Vec::new();
    for i in 0..n_vars {
        let left = real(rng);
        let right = left + rng.gen_range(0.001..500.0);
        let n_terms = rng.gen_range(1..5);
        let terms = (0..n_terms)
            .map(|t| {
                let mut p: Vec<f64> = (0..4)
                    .map(|_| left + rng.gen::<f64>() * (right - left))
                    .collect();
                p.sort_by(f64::total_cmp);
                let mut term = FuzzyTerm::new(
                    format!("{}{t}", NAMES[rng.gen_range(0..NAMES.len())]),
                    TrapezoidShape::new(p[0], p[1], p[2], p[3]),
                );
                term.extra = extras(rng, "tx");
                term.shape_extra = extras(rng, "sx");
                term
            })
            .collect();
        let var_type = if i + 1 == n_vars {
            VarType::Output
        } else {
            VarType::Input
        };
        let mut v = FuzzyVariable::new(
            format!("{}_{i}", NAMES[rng.gen_range(0..NAMES.len())]),
            left,
            right,
            var_type,
            terms,
        );
        if rng.gen_bool(0.5) {
            v.scale = "unit & scale".to_string();
        }
        v.extra = extras(rng, "vx");
        kb.push(v);
    }
    let clause = |rng: &mut dyn rand::RngCore, kb: &[FuzzyVariable]| {
        let v = &kb[rng.gen_range(0..kb.len())];
        Clause::new(
            v.name.clone(),
            v.terms[rng.gen_range(0..v.terms.len())].name.clone(),
        )
    };
    let rules = (0..rng.gen_range(0..6))
        .map(|r| {
            let connector = if rng.gen_bool(0.5) {
                Connector::And
            } else {
                Connector::Or
            };
            let antecedent = (0..rng.gen_range(1..4)).map(|_| clause(rng, &kb)).collect();
            let consequent = vec![clause(rng, &kb)];
            let mut rule = Rule::new(format!("Rule{r}"), connector, antecedent, consequent);
            rule.weight = rng.gen();
            if rng.gen_bool(0.2) {
                rule.operator = Operator::Max;
            }
            rule.extra = extras(rng, "rx");
            rule
        })
        .collect();
    let rule_base = RuleBase {
        name: "rb & co".to_string(),
        rules,
        extra: extras(rng, "bx"),
        ..RuleBase::default()
    };
    let mut c = FuzzyController::new(kb, rule_base);
    c.name = format!("controller {}", rng.gen::<u32>());
    c.extra = extras(rng, "cx");
    c.knowledge_base_extra = extras(rng, "kx");
    c
}

pub fn start_time() -> NaiveDateTime {
    NaiveDate::from_ymd_opt(2019, 1, 1)
        .unwrap()
        .and_hms_milli_opt(10, 0, 0, 0)
        .unwrap()
}

/// Random session timing: up to `max_moves` moves and `max_samples` samples.
/// With `fill_windows` every move window receives at least one sample.
/// Some samples land exactly on move times to exercise window boundaries.
pub fn random_session(
    rng: &mut impl Rng,
    max_moves: usize,
    max_samples: usize,
    fill_windows: bool,
) -> (SessionMeta, Vec<IndicatorSample>, Vec<MoveEvent>) {
    let meta = SessionMeta {
        app_started_at: start_time(),
        board_size: 19,
        perspective: Perspective::Mover,
    };
    let m = rng.gen_range(1..=max_moves);
    let mut t = rng.gen_range(if fill_windows { 1 } else { 0 }..3000i64);
    let mut move_ms: Vec<i64> = Vec::with_capacity(m);
    for _ in 0..m {
        move_ms.push(t);
        t += rng.gen_range(1..5000);
    }
    let horizon = t + 2000;
    let n = rng.gen_range(if fill_windows { m } else { 0 }..=max_samples.max(m));
    let mut times: Vec<i64> = Vec::with_capacity(n);
    if fill_windows {
        let mut lower = 0;
        for &upper in &move_ms {
            times.push(rng.gen_range(lower..upper));
            lower = upper;
        }
    }
    while times.len() < n {
        times.push(if rng.gen_bool(0.1) {
            move_ms[rng.gen_range(0..m)]
        } else {
            rng.gen_range(0..horizon)
        });
    }
    times.sort_unstable();
    let samples = times
        .into_iter()
        .map(|t_ms| {
            let mut v = || (rng.gen_range(0..=1000) as f64) / 100.0;
            IndicatorSample {
                t_ms,
                attention: v(),
                left_brain: v(),
                right_brain: v(),
                stress: v(),
                fatigue: v(),
            }
        })
        .collect();
    let moves = move_ms
        .iter()
        .enumerate()
        .map(|(i, &ms)| MoveEvent {
            move_number: i as u32 + 1,
            played_at: meta.app_started_at + TimeDelta::milliseconds(ms),
            color: if i % 2 == 0 {
                Color::Black
            } else {
                Color::White
            },
            position: format!(
                "{}{}",
                (b'a' + (i % 19) as u8) as char,
                (b'a' + (i / 19) as u8) as char
            ),
        })
        .collect();
    (meta, samples, moves)
}

/// Brute force: for each move scan every sample and keep those in
/// `[previous move, this move)`, the first window opening at app start.
pub fn oracle_per_move(
    meta: &SessionMeta,
    samples: &[IndicatorSample],
    moves: &[MoveEvent],
) -> Vec<PerMoveIndicators> {
    let start_ms = 0i64;
    let move_ms: Vec<i64> = moves
        .iter()
        .map(|m| (m.played_at - meta.app_started_at).num_milliseconds())
        .collect();
    (0..moves.len())
        .map(|k| {
            let lower = if k == 0 { start_ms } else { move_ms[k - 1] };
            let upper = move_ms[k];
            let mut sum = [0.0; 5];
            let mut n = 0;
            for s in samples {
                if s.t_ms >= lower && s.t_ms < upper {
                    let v = [
                        s.attention,
                        s.left_brain,
                        s.right_brain,
                        s.stress,
                        s.fatigue,
                    ];
                    for i in 0..5 {
                        sum[i] += v[i];
                    }
                    n += 1;
                }
            }
            let mean = |i: usize| if n == 0 { 0.0 } else { sum[i] / n as f64 };
            PerMoveIndicators {
                move_number: moves[k].move_number,
                attention: mean(0),
                left_brain: mean(1),
                right_brain: mean(2),
                stress: mean(3),
                fatigue: mean(4),
                sample_count: n,
            }
        })
        .collect()
}

/// `[ALD, BALD, SLD, FLD]` per move, zeros for the first.
pub fn oracle_distances(per_move: &[PerMoveIndicators]) -> Vec<[f64; 4]> {
    let mut out = Vec::new();
    for k in 0..per_move.len() {
        if k == 0 {
            out.push([0.0; 4]);
            continue;
        }
        let (a, b) = (&per_move[k], &per_move[k - 1]);
        out.push([
            (a.attention - b.attention).abs(),
            (a.left_brain - b.left_brain).abs(),
            (a.stress - b.stress).abs(),
            (a.fatigue - b.fatigue).abs(),
        ]);
    }
    out
}

/// Mean of squared residuals, written out longhand.
pub fn oracle_mse(inferred: &[Option<f64>], desired: &[f64], penalty: f64) -> f64 {
    let mut total = 0.0;
    for i in 0..desired.len() {
        total += match inferred[i] {
            Some(x) => (x - desired[i]) * (x - desired[i]),
            None => penalty,
        };
    }
    total / desired.len() as f64
}

pub fn random_record(rng: &mut impl Rng, move_number: u32) -> MoveFeatureRecord {
    MoveFeatureRecord {
        move_number,
        ald: rng.gen_range(0.0..=10.0),
        bald: rng.gen_range(0.0..=10.0),
        sld: rng.gen_range(0.0..=10.0),
        fld: rng.gen_range(0.0..=10.0),
        sn: rng.gen_range(0.0..=2048.0),
        tmr: rng.gen_range(0.0..=1.0),
        desired_output: rng.gen_range(0.0..=1.0),
    }
}

/// Trapezoid membership computed independently of the library.
pub fn oracle_membership(p: [f64; 4], x: f64) -> f64 {
    if x < p[0] || x > p[3] {
        0.0
    } else if x >= p[1] && x <= p[2] {
        1.0
    } else if x < p[1] {
        (x - p[0]) / (p[1] - p[0])
    } else {
        (p[3] - x) / (p[3] - p[2])
    }
}
