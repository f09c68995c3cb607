use nbproc_core::corpus::{filter_vocabulary, load_bag_of_words, split_train_test, Corpus};
use nbproc_core::distributions::{crt_pmf, log_stirling_row, sample_crt, sample_dirichlet, sample_gamma, RandomSource};
use nbproc_core::evaluation::{heldout_perplexity, SampleAccumulator};
use nbproc_core::models::{initialize, sweep, Documents, HyperParams, ModelKind, SweepOptions};
use proptest::prelude::*;
use rand::RngCore;
use statrs::function::gamma::ln_gamma;

fn log_sum_exp(xs: impl Iterator<Item = f64>) -> f64 {
    let xs: Vec<f64> = xs.collect();
    let hi = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    hi + xs.iter().map(|x| (x - hi).exp()).sum::<f64>().ln()
}

fn corpus_strategy() -> impl Strategy<Value = Corpus> {
    (2usize..9, 1usize..7).prop_flat_map(|(v, j)| {
        let doc = prop::collection::vec((0..v as u32, 1u32..6), 1..6);
        prop::collection::vec(doc, j).prop_map(move |docs| {
            let vocab = (0..v).map(|t| format!("w{t}")).collect();
            Corpus::new(vocab, docs).unwrap()
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn stirling_normalizer(m in 0u64..=50, r in 0.05f64..20.0) {
        let row = log_stirling_row(m);
        let lhs = log_sum_exp(row.iter().enumerate().map(|(j, &ls)| ls + j as f64 * r.ln()));
        let rhs = ln_gamma(m as f64 + r) - ln_gamma(r);
        prop_assert!((lhs - rhs).abs() < 1e-9, "m={} r={} lhs={} rhs={}", m, r, lhs, rhs);
    }

    #[test]
    fn crt_pmf_is_a_distribution(m in 0u64..=200, r in 0.01f64..50.0) {
        let pmf = crt_pmf(m, r).unwrap();
        prop_assert_eq!(pmf.len() as u64, m + 1);
        prop_assert!((pmf.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        if m > 0 {
            prop_assert_eq!(pmf[0], 0.0);
        }
    }

    #[test]
    fn crt_draws_stay_in_support(m in 0u64..500, r in 0.01f64..50.0, seed in any::<u64>()) {
        let mut rng = RandomSource::new(seed);
        let l = sample_crt(m, r, &mut rng).unwrap();
        prop_assert!(l <= m);
        prop_assert_eq!(l == 0, m == 0);
    }

    #[test]
    fn same_seed_same_stream(seed in any::<u64>(), index in any::<u64>()) {
        let mut a = RandomSource::new(seed);
        let mut b = RandomSource::new(seed);
        for _ in 0..8 {
            prop_assert_eq!(a.next_u64(), b.next_u64());
        }
        let mut ca = a.child(index);
        let mut cb = RandomSource::new(seed).child(index);
        prop_assert_eq!(ca.next_u64(), cb.next_u64());
        prop_assert_eq!(sample_gamma(2.5, 1.0, &mut a).unwrap(), sample_gamma(2.5, 1.0, &mut b).unwrap());
    }

    #[test]
    fn dirichlet_draws_are_normalized(alpha in prop::collection::vec(0.01f64..10.0, 1..20), seed in any::<u64>()) {
        let x = sample_dirichlet(&alpha, &mut RandomSource::new(seed)).unwrap();
        prop_assert!((x.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        prop_assert!(x.iter().all(|&v| v >= 0.0));
    }

    #[test]
    fn corpus_round_trip(corpus in corpus_strategy()) {
        let dir = tempfile::tempdir().unwrap();
        let (d, v) = (dir.path().join("docword.txt"), dir.path().join("vocab.txt"));
        corpus.write_bag_of_words(&d, &v).unwrap();
        prop_assert_eq!(load_bag_of_words(&d, &v).unwrap(), corpus);
    }

    #[test]
    fn filter_is_idempotent(corpus in corpus_strategy(), threshold in 1usize..4) {
        if let Ok(once) = filter_vocabulary(&corpus, threshold) {
            prop_assert_eq!(filter_vocabulary(&once, threshold).unwrap(), once.clone());
            prop_assert!(once.document_frequencies().iter().all(|&f| f >= threshold));
        }
    }

    #[test]
    fn split_partitions_tokens(corpus in corpus_strategy(), frac in 0.05f64..0.95, seed in any::<u64>()) {
        let split = split_train_test(&corpus, frac, &mut RandomSource::new(seed)).unwrap();
        prop_assert_eq!((split.num_train_tokens() + split.num_test_tokens()) as u64, corpus.total_tokens());
        for j in 0..corpus.num_docs() {
            prop_assert!(!split.train()[j].is_empty());
            let mut all = split.train()[j].clone();
            all.extend(&split.test()[j]);
            all.sort_unstable();
            prop_assert_eq!(all, corpus.tokens(j));
        }
    }

    #[test]
    fn sweeps_preserve_invariants(
        corpus in corpus_strategy(),
        kind_index in 0usize..ModelKind::ALL.len(),
        k in 1usize..5,
        seed in any::<u64>(),
    ) {
        let kind = ModelKind::ALL[kind_index];
        let docs = Documents::new((0..corpus.num_docs()).map(|j| corpus.tokens(j)).collect(), corpus.vocab_size()).unwrap();
        let hyper = HyperParams { num_topics: k, init_iters: 2, ..HyperParams::default() };
        let opts = SweepOptions::default();
        let mut rng = RandomSource::new(seed);
        let mut state = initialize(kind, &docs, &hyper, &mut rng, &opts).unwrap();
        for _ in 0..5 {
            sweep(&mut state, &docs, &hyper, &mut rng, &opts).unwrap();
            if let Err(msg) = state.check_invariants(&docs) {
                prop_assert!(false, "{}: {}", kind, msg);
            }
            if let Some(p) = kind.fixed_p_j() {
                prop_assert!(state.p_j.iter().all(|&x| x == p));
            }
        }
    }

    #[test]
    fn perplexity_ignores_document_scale(corpus in corpus_strategy(), scale in 1e-3f64..1e3, seed in any::<u64>()) {
        let mut rng = RandomSource::new(seed);
        let split = split_train_test(&corpus, 0.5, &mut rng).unwrap();
        prop_assume!(split.num_test_tokens() > 0);
        let docs = Documents::from_split(&split, corpus.vocab_size()).unwrap();
        let hyper = HyperParams { num_topics: 3, init_iters: 1, ..HyperParams::default() };
        let state = initialize(ModelKind::GammaNb, &docs, &hyper, &mut rng, &SweepOptions::default()).unwrap();
        let mut scaled = state.clone();
        scaled.lambda.iter_mut().take(3).for_each(|x| *x *= scale);

        let mut a = SampleAccumulator::for_split(&split, corpus.vocab_size());
        a.accumulate(&state).unwrap();
        let mut b = SampleAccumulator::for_split(&split, corpus.vocab_size());
        b.accumulate(&scaled).unwrap();
        let (pa, pb) = (heldout_perplexity(&a, &split).unwrap(), heldout_perplexity(&b, &split).unwrap());
        prop_assert!((pa - pb).abs() <= 1e-9 * pa, "{} vs {}", pa, pb);
        prop_assert!(pa >= 1.0);
    }
}
