mod common;

use pfml::dataio::{generate_synthetic_session, load_session, write_session};
use pfml::fixtures;
use pfml::preprocess::{
    absolute_timestamps, consecutive_distances, per_move_average, training_set_for_session,
    usable_distances, Color,
};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

proptest! {
    #[test]
    fn averages_match_brute_force_with_empty_windows(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (meta, samples, moves) = common::random_session(&mut rng, 30, 400, false);
        let timed = absolute_timestamps(&samples, &meta).unwrap();
        let got = per_move_average(&timed, &moves, &meta).unwrap();
        prop_assert_eq!(&got, &common::oracle_per_move(&meta, &samples, &moves));

        let usable = usable_distances(&got);
        let oracle = common::oracle_distances(&got);
        for d in &usable {
            let k = d.move_number as usize - 1;
            prop_assert!(!got[k].is_flagged());
            prop_assert!(k == 0 || !got[k - 1].is_flagged());
            prop_assert_eq!([d.ald, d.bald, d.sld, d.fld], oracle[k]);
        }
        let expected = (0..got.len())
            .filter(|&k| !got[k].is_flagged() && (k == 0 || !got[k - 1].is_flagged()))
            .count();
        prop_assert_eq!(usable.len(), expected);
    }

    #[test]
    fn distances_match_brute_force_on_full_windows(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (meta, samples, moves) = common::random_session(&mut rng, 30, 400, true);
        let timed = absolute_timestamps(&samples, &meta).unwrap();
        let per_move = per_move_average(&timed, &moves, &meta).unwrap();
        let d = consecutive_distances(&per_move).unwrap();
        prop_assert_eq!(d.len(), moves.len());
        let oracle = common::oracle_distances(&common::oracle_per_move(&meta, &samples, &moves));
        for (row, want) in d.iter().zip(&oracle) {
            prop_assert_eq!([row.ald, row.bald, row.sld, row.fld], *want);
        }
    }

    #[test]
    fn generated_bundles_always_load(seed in any::<u64>(), moves in 2usize..40, per in 0usize..6) {
        let bundle = generate_synthetic_session(seed, moves, per, &fixtures::expert_controller()).unwrap();
        let dir = tempfile::tempdir().unwrap();
        write_session(&bundle, dir.path()).unwrap();
        prop_assert_eq!(load_session(dir.path()).unwrap(), bundle.clone());
        prop_assert!(bundle.samples.iter().all(|s| s.values().iter().all(|v| (0.0..=10.0).contains(v))));
    }
}

#[test]
fn generated_bundle_bytes_are_deterministic() {
    let hidden = fixtures::expert_controller();
    let read_all = |dir: &std::path::Path| {
        let mut files: Vec<_> = std::fs::read_dir(dir)
            .unwrap()
            .map(|e| {
                let e = e.unwrap();
                (e.file_name(), std::fs::read(e.path()).unwrap())
            })
            .collect();
        files.sort();
        files
    };
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    write_session(
        &generate_synthetic_session(11, 25, 4, &hidden).unwrap(),
        a.path(),
    )
    .unwrap();
    write_session(
        &generate_synthetic_session(11, 25, 4, &hidden).unwrap(),
        b.path(),
    )
    .unwrap();
    assert_eq!(read_all(a.path()), read_all(b.path()));
}

#[test]
fn white_focus_uses_white_moves() {
    let bundle = generate_synthetic_session(5, 30, 5, &fixtures::expert_controller()).unwrap();
    let set = training_set_for_session(
        &bundle.meta,
        &bundle.samples,
        &bundle.moves,
        &bundle.predictions,
        Color::White,
    )
    .unwrap();
    assert!(set.records.iter().all(|r| r.move_number % 2 == 0));
    assert_eq!(set.records.len() + set.skipped.len(), 15);
}
