//! Whole-pipeline runs against directory backends.

use std::collections::BTreeMap;
use std::path::Path;

use ncss::adversary::{entropy_audit, Selection};
use ncss::codec::{
    classify_overflow, encode_message, DigitString, EncodeParams, GroupingMode, Rendering,
};
use ncss::gf::{build_vandermonde, default_points, Field, FieldSpec};
use ncss::pipeline::{self, BlockSize, PipelineRequest};
use ncss::planner::SecurityProfile;
use ncss::storage::{assemble_stream, fetch_shards, reconstruct_fetched, Backends, StorageError};
use ncss::Error;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_digits(d: u32, len: usize, seed: u64) -> DigitString {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    DigitString::new(d, (0..len).map(|_| rng.gen_range(0..d) as u16).collect()).unwrap()
}

fn request(k: u32, d: u32, mode: GroupingMode, n: usize, p: usize) -> PipelineRequest {
    PipelineRequest {
        spec: FieldSpec::new(k, d).unwrap(),
        mode,
        block_size: BlockSize::Fixed(n),
        profile: SecurityProfile::new(vec![0.3; p], 1e-9).unwrap(),
        secret_digits: 0,
        parallel: false,
    }
}

fn tree(root: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in std::fs::read_dir(&dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                let rel = path.strip_prefix(root).unwrap().display().to_string();
                out.insert(rel, std::fs::read(&path).unwrap());
            }
        }
    }
    out
}

#[test]
fn long_streams_round_trip_through_directories() {
    let configs = [
        (8, 2, GroupingMode::Strict, 10, 3),
        (16, 16, GroupingMode::Strict, 50, 2),
        (8, 3, GroupingMode::AlphaBounded { alpha: 2.0 }, 7, 4),
        (16, 10, GroupingMode::AlphaBounded { alpha: 5.0 }, 100, 1),
    ];
    for (i, &(k, d, mode, n, p)) in configs.iter().enumerate() {
        let digits = random_digits(d, 100_000, i as u64);
        let req = request(k, d, mode, n, p);
        let prep = pipeline::prepare(&digits, &req).unwrap();
        assert!(prep.plan.meets_budget());
        let dir = tempfile::tempdir().unwrap();
        let backends = Backends::directory(dir.path(), p);
        pipeline::store(&prep, &req.profile, &backends, None).unwrap();
        let (manifest, back) = pipeline::recover(&backends).unwrap();
        assert_eq!(back, digits, "config {i}");
        assert_eq!(manifest.total_digits, prep.message.total_digits() as u64);
    }
}

#[test]
fn bytes_and_empty_input_round_trip() {
    for bytes in [
        Vec::new(),
        b"x".to_vec(),
        (0..=255u8).cycle().take(5000).collect(),
    ] {
        let digits = DigitString::from_bytes(&bytes, 2).unwrap();
        let req = request(8, 2, GroupingMode::Strict, 4, 2);
        let prep = pipeline::prepare(&digits, &req).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let backends = Backends::directory(dir.path(), 2);
        pipeline::store(&prep, &req.profile, &backends, Some(bytes.len() as u64)).unwrap();
        assert_eq!(pipeline::recover_bytes(&backends).unwrap(), bytes);
    }
}

#[test]
fn fetch_leaves_the_backends_untouched() {
    let digits = random_digits(2, 4096, 7);
    let req = request(8, 2, GroupingMode::Strict, 8, 3);
    let prep = pipeline::prepare(&digits, &req).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let backends = Backends::directory(dir.path(), 3);
    pipeline::store(&prep, &req.profile, &backends, None).unwrap();
    let before = tree(dir.path());
    for _ in 0..2 {
        assert_eq!(pipeline::recover(&backends).unwrap().1, digits);
    }
    assert_eq!(tree(dir.path()), before);
}

#[test]
fn withheld_and_corrupted_shards_are_reported() {
    let digits = random_digits(2, 2048, 3);
    let req = request(8, 2, GroupingMode::Strict, 4, 3);
    let prep = pipeline::prepare(&digits, &req).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let backends = Backends::directory(dir.path(), 3);
    let manifest = pipeline::store(&prep, &req.profile, &backends, None).unwrap();
    let fetched = fetch_shards(&manifest, &backends).unwrap();

    let withheld = manifest.clouds[1].digit_count;
    assert!(withheld > 0);
    let shards: Vec<Option<&[u16]>> = fetched
        .clouds
        .iter()
        .enumerate()
        .map(|(i, s)| (i != 1).then_some(s.as_slice()))
        .collect();
    match assemble_stream(&manifest, &shards, Some(&fetched.local)) {
        Err(StorageError::IncompleteData { missing, total }) => {
            assert_eq!(missing, withheld);
            assert_eq!(total, manifest.total_digits);
        }
        other => panic!("expected IncompleteData, got {other:?}"),
    }

    let shard = dir.path().join("cloud_1").join(&manifest.clouds[1].key);
    let mut data = std::fs::read(&shard).unwrap();
    *data.last_mut().unwrap() ^= 1;
    std::fs::write(&shard, &data).unwrap();
    assert!(matches!(
        pipeline::recover(&backends),
        Err(Error::Storage(StorageError::ChecksumMismatch { .. }))
    ));

    std::fs::remove_file(&shard).unwrap();
    assert!(matches!(
        pipeline::recover(&backends),
        Err(Error::Storage(StorageError::MissingShard(_)))
    ));
    assert_eq!(reconstruct_fetched(&manifest, &fetched).unwrap(), digits);
}

#[test]
fn parallel_encoding_matches_sequential() {
    let digits = random_digits(4, 100_000, 11);
    let spec = FieldSpec::new(16, 4).unwrap();
    let seq = encode_message(&digits, &spec, &EncodeParams::new(GroupingMode::Strict, 37)).unwrap();
    let par = encode_message(
        &digits,
        &spec,
        &EncodeParams {
            parallel: true,
            ..EncodeParams::new(GroupingMode::Strict, 37)
        },
    )
    .unwrap();
    assert_eq!(seq.coded_digits(), par.coded_digits());
    assert_eq!(seq.work, par.work);
}

/// With a non-integer alpha the minimal width can be too small for the
/// bound: k = 3, d = 2, alpha = 2.9 gives width 1, yet coded elements need
/// up to 3 binary digits. Integer alpha = 2 (width 2) never overflows.
#[test]
fn alpha_width_guarantee_needs_integer_alpha() {
    let n = 3;
    let spec = FieldSpec::new(3, 2).unwrap();
    for (alpha, width, expect_violation) in [(2.9, 1usize, true), (2.0, 2, false)] {
        let blocks = 1usize << (n * width);
        let all: Vec<u16> = (0..blocks)
            .flat_map(|b| (0..n * width).rev().map(move |i| (b >> i & 1) as u16))
            .collect();
        let digits = DigitString::new(2, all).unwrap();
        let mode = GroupingMode::AlphaBounded { alpha };
        let msg = encode_message(&digits, &spec, &EncodeParams::new(mode, n)).unwrap();
        assert_eq!(msg.grouping.width, width);
        let singletons: Vec<Vec<usize>> = (0..n).map(|e| vec![e]).collect();
        let violated = msg.blocks.iter().any(|bl| {
            !classify_overflow(&vec![width; n], bl, &singletons, alpha)
                .unwrap()
                .alpha_bound_satisfied
        });
        assert_eq!(violated, expect_violation, "alpha {alpha}");
    }
}

/// Hiding one digit per component is only perfectly secret when each
/// component is a single digit.
#[test]
fn one_hidden_digit_is_perfect_only_for_single_digit_components() {
    let field = Field::new(2).unwrap();
    let a = build_vandermonde(&field, &default_points(&field, 1).unwrap()).unwrap();
    let multi = Selection::leading_digits_hidden(2, Rendering::Fixed(2), 1);
    assert!(!entropy_audit(&field, &a, 1, &multi).unwrap().perfect);
    let single = Selection::leading_digits_hidden(4, Rendering::Fixed(1), 1);
    assert!(entropy_audit(&field, &a, 1, &single).unwrap().perfect);
}
