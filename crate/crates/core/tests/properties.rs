use proptest::prelude::*;

use univtest::codes::{omega, Code, MixMode, MixtureCode, PredictorModel, RCode};
use univtest::entropy::{empirical_entropy_bits, sample_entropy};
use univtest::hypothesis::{serial_independence_test, Decision, Quantizer};
use univtest::sample::{count_contexts, parse_sample, write_sample};
use univtest::{Alphabet, ProductAlphabet, Sample, SampleFormat, Symbol};

fn pieces(size: u32) -> impl Strategy<Value = Vec<Vec<Symbol>>> {
    prop::collection::vec(prop::collection::vec(0..size, 1..60), 1..4)
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 128, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn context_counts_are_consistent(p in pieces(3), k in 0usize..4) {
        let x = Sample::new(Alphabet::new(3).unwrap(), p.clone()).unwrap();
        let counts = count_contexts(&x, k);
        let windows: usize = p.iter().map(|piece| piece.len().saturating_sub(k)).sum();
        prop_assert_eq!(counts.total_windows(), windows as u64);
        prop_assert_eq!(counts.word_counts().sum::<u64>(), windows as u64);
        for (context, row) in counts.to_dense() {
            prop_assert_eq!(row.iter().sum::<u64>(), counts.context_total(&context));
        }
    }

    #[test]
    fn entropy_within_bounds(p in pieces(4), k in 0usize..3) {
        let x = Sample::new(Alphabet::new(4).unwrap(), p).unwrap();
        if let Ok(h) = sample_entropy(&x, k) {
            prop_assert!(h.value_bits_per_symbol >= -1e-12);
            prop_assert!(h.value_bits_per_symbol <= 2.0 + 1e-12);
        }
    }

    #[test]
    fn codes_never_beat_the_empirical_entropy_by_much(p in pieces(2), m in 0usize..3) {
        // Any order-m measure is bounded by 2^(-(t - rm) h*_m), and the
        // first m symbols of each piece cost one bit each.
        let x = Sample::new(Alphabet::binary(), p).unwrap();
        let head: usize = x.pieces().iter().map(|q| q.len().min(m)).sum();
        let floor = empirical_entropy_bits(&count_contexts(&x, m)) + head as f64;
        for model in [PredictorModel::laplace(m), PredictorModel::krichevsky(m)] {
            prop_assert!(-model.log2_measure(&x) >= floor - 1e-9);
        }
    }

    #[test]
    fn r_is_within_its_weight_of_every_component(p in pieces(2), n in 0usize..6) {
        let x = Sample::new(Alphabet::binary(), p).unwrap();
        let r = RCode::new(n).code_length(&x).unwrap().bits;
        for i in 0..=n {
            let k = PredictorModel::krichevsky(i).code_length(&x).unwrap().bits;
            prop_assert!(r <= k - omega(i + 1).log2() + 1e-9);
        }
    }

    #[test]
    fn mixture_lengths_are_ordered(p in pieces(2), w in 0.01f64..0.99) {
        let x = Sample::new(Alphabet::binary(), p).unwrap();
        let parts = || -> Vec<Box<dyn Code>> {
            vec![Box::new(PredictorModel::krichevsky(0)), Box::new(PredictorModel::laplace(2))]
        };
        let mix = MixtureCode::new(parts(), vec![w, 1.0 - w], MixMode::Mix).unwrap();
        let mm = MixtureCode::new(parts(), vec![w, 1.0 - w], MixMode::Mm).unwrap();
        let mix = mix.code_length(&x).unwrap().bits;
        let mm = mm.code_length(&x).unwrap().bits;
        prop_assert!(mix <= mm + 1e-9);
        // The mixture is never more than log2(1/w_max) worse than the better component.
        let best = PredictorModel::krichevsky(0).code_length(&x).unwrap().bits
            .min(PredictorModel::laplace(2).code_length(&x).unwrap().bits);
        prop_assert!(mix <= best - w.min(1.0 - w).log2() + 1e-9);
    }

    #[test]
    fn csv_round_trip(p in pieces(5)) {
        let x = Sample::new(Alphabet::new(5).unwrap(), p).unwrap();
        let bytes = write_sample(&x, SampleFormat::SymbolCsv).unwrap();
        let back = parse_sample(&bytes, SampleFormat::SymbolCsv, Alphabet::new(5).unwrap()).unwrap();
        prop_assert_eq!(back, x);
    }

    #[test]
    fn bit_stream_round_trip(bytes in prop::collection::vec(any::<u8>(), 1..64)) {
        let x = parse_sample(&bytes, SampleFormat::BitStream, Alphabet::binary()).unwrap();
        prop_assert_eq!(write_sample(&x, SampleFormat::BitStream).unwrap(), bytes);
    }

    #[test]
    fn product_encoding_is_bijective(a in 0u32..3, b in 0u32..5, c in 0u32..2) {
        let product = ProductAlphabet::from_sizes(&[3, 5, 2]).unwrap();
        let joint = product.encode(&[a, b, c]).unwrap();
        prop_assert!((joint as usize) < product.joint_size());
        prop_assert_eq!(product.decode(joint), vec![a, b, c]);
    }

    #[test]
    fn quantizer_is_total_on_its_domain(v in 0.0f64..=1.0, cells in 2usize..40) {
        let q = Quantizer::uniform(0.0, 1.0, cells).unwrap();
        prop_assert!((q.cell(&[v]).unwrap() as usize) < cells);
    }

    #[test]
    fn decision_matches_statistic(p in pieces(2), alpha in 0.001f64..0.999) {
        let x = Sample::new(Alphabet::binary(), p).unwrap();
        let r = serial_independence_test(&x, 0, &RCode::new(3), alpha).unwrap();
        prop_assert!((r.threshold_bits - (1.0 / alpha).log2()).abs() < 1e-12);
        let expected = if r.statistic_bits > r.threshold_bits { Decision::Reject } else { Decision::Accept };
        prop_assert_eq!(r.decision, expected);
    }
}
