use avprune::io::*;
use avprune::scoring::Strategy;
use avprune::synth::{generate_synthetic, Regime, SynthParams};
use avprune::{Error, Tensor};
use proptest::prelude::*;
use proptest::strategy::Strategy as _;

fn tensor() -> impl proptest::strategy::Strategy<Value = Tensor> {
    proptest::collection::vec(0usize..5, 0..=3).prop_flat_map(|shape| {
        let n: usize = shape.iter().product();
        proptest::collection::vec(-1e6f32..1e6, n)
            .prop_map(move |data| Tensor::new(shape.clone(), data).unwrap())
    })
}

fn group_retention(id: usize) -> impl proptest::strategy::Strategy<Value = GroupRetention> {
    (0usize..20, 0usize..15, 0.0f64..=1.0, 0.0f64..=1.0).prop_flat_map(move |(nv, na, rv, ra)| {
        let positions = na.div_ceil(2);
        (
            proptest::sample::subsequence((0..nv).collect::<Vec<_>>(), nv.min(1)..=nv),
            proptest::sample::subsequence(
                (0..positions).collect::<Vec<_>>(),
                positions.min(1)..=positions,
            ),
        )
            .prop_map(move |(video, audio)| GroupRetention {
                group_id: id,
                video_tokens: nv,
                audio_tokens: na,
                rho_video: rv,
                rho_audio: ra,
                video,
                audio,
            })
    })
}

fn prune_result() -> impl proptest::strategy::Strategy<Value = PruneResultFile> {
    (1usize..6, 0usize..3).prop_flat_map(|(g, s)| {
        let strategy = [
            Strategy::Uniform,
            Strategy::VideoCentric,
            Strategy::AudioCentric,
        ][s];
        (0..g)
            .map(group_retention)
            .collect::<Vec<_>>()
            .prop_map(move |groups| PruneResultFile {
                strategy,
                pool_factor: 2,
                groups,
            })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn tensors_round_trip(t in tensor()) {
        let bytes = encode_tensor(&t);
        prop_assert_eq!(bytes.len(), 16 + 8 * t.ndim() + 4 * t.numel());
        prop_assert_eq!(decode_tensor(&bytes).unwrap(), t);
    }

    #[test]
    fn truncation_is_detected(t in tensor(), cut in 1usize..64) {
        let bytes = encode_tensor(&t);
        let cut = cut.min(bytes.len());
        let is_truncated = matches!(decode_tensor(&bytes[..bytes.len() - cut]), Err(Error::Truncated { .. }));
        prop_assert!(is_truncated);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(50))]

    #[test]
    fn results_round_trip(r in prune_result()) {
        let text = format_prune_result(&r).unwrap();
        let back = parse_prune_result(&text).unwrap();
        prop_assert_eq!(&back, &r);
        prop_assert_eq!(format_prune_result(&back).unwrap(), text);
    }

    #[test]
    fn generated_group_specs_round_trip(seed in any::<u64>(), g in 1usize..20, nv in 0usize..30, na in 1usize..30) {
        let inst = generate_synthetic(&SynthParams::new(seed, g, nv, na, 4, Regime::Balanced)).unwrap();
        let text = format_group_spec(&inst.spec);
        prop_assert_eq!(parse_group_spec(&text).unwrap(), inst.spec);
    }
}

#[test]
fn file_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let t = Tensor::new(vec![2, 3], vec![0.5, -1.0, 2.0, 3.25, 0.0, -0.125]).unwrap();
    let path = dir.path().join("t.omst");
    write_tensor(&t, &path).unwrap();
    assert_eq!(read_tensor(&path).unwrap(), t);
    assert!(matches!(
        read_tensor(dir.path().join("missing.omst")),
        Err(Error::Io { .. })
    ));
}

#[test]
fn header_errors() {
    let good = encode_tensor(&Tensor::new(vec![2], vec![1.0, 2.0]).unwrap());

    let mut bad = good.clone();
    bad[0] = b'X';
    assert!(matches!(decode_tensor(&bad), Err(Error::BadMagic { .. })));

    let mut bad = good.clone();
    bad[4] = 2;
    assert!(matches!(
        decode_tensor(&bad),
        Err(Error::UnsupportedVersion(2))
    ));

    let mut bad = good.clone();
    bad[8] = 1;
    assert!(matches!(
        decode_tensor(&bad),
        Err(Error::UnsupportedDtype(1))
    ));

    let mut bad = good.clone();
    bad.push(0);
    assert!(matches!(
        decode_tensor(&bad),
        Err(Error::TrailingBytes { .. })
    ));

    let mut bad = good.clone();
    let at = bad.len() - 4;
    bad[at..].copy_from_slice(&f32::NAN.to_le_bytes());
    assert!(matches!(
        decode_tensor(&bad),
        Err(Error::NonFinite { index: 1 })
    ));
}

#[test]
fn group_spec_errors() {
    assert!(matches!(
        parse_group_spec("groups 1\n0 -1 3 0\n"),
        Err(Error::GroupSpec(_))
    ));
    assert!(matches!(
        parse_group_spec("groups 2\n0 1 3 0\n"),
        Err(Error::GroupSpec(_))
    ));
    assert!(matches!(
        parse_group_spec("groups 1\n0 1 3\n"),
        Err(Error::Parse { .. })
    ));
    let spec = parse_group_spec("# header\ngroups 2\n\n1 4 2 1\n0 3 5 0\n").unwrap();
    assert_eq!(spec.video_counts(), vec![3, 4]);
}

#[test]
fn tampered_summary_is_rejected() {
    let r = PruneResultFile {
        strategy: Strategy::Uniform,
        pool_factor: 2,
        groups: vec![GroupRetention {
            group_id: 0,
            video_tokens: 4,
            audio_tokens: 3,
            rho_video: 0.5,
            rho_audio: 0.5,
            video: vec![0, 2],
            audio: vec![1],
        }],
    };
    let text = format_prune_result(&r).unwrap();
    let tampered = text.replace("video_tokens 4 2", "video_tokens 4 3");
    assert_ne!(text, tampered);
    assert!(parse_prune_result(&tampered).is_err());
}
