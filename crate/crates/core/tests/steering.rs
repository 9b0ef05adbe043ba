use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use slackcast::model::{
    refit_head, train_mse, BankActivations, Dims, Encoder, GammaMode, Head, Injection, Model, Query, Sample, Steering, SteeringConfig,
    TrainParams,
};

fn dims() -> Dims {
    Dims {
        input: 6,
        hidden: 8,
        blocks: 4,
        head_hidden: 5,
    }
}

fn model(seed: u64, config: SteeringConfig, gamma: Vec<f64>) -> Model {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = dims();
    let mut encoder = Encoder::init(d, &mut rng);
    // Non-trivial biases so the check does not lean on zero-initialized terms.
    encoder.params.iter_mut().filter(|p| **p == 0.0).for_each(|p| *p = rng.gen_range(-0.3..0.3));
    Model {
        encoder,
        head: Head::init(d.hidden, d.head_hidden, [0.0, 0.0], &mut rng),
        steering: Some(Steering { config, gamma }),
        bank_checksum: None,
    }
}

fn input(rng: &mut ChaCha8Rng) -> Vec<f64> {
    (0..dims().input).map(|_| rng.gen_range(-2.0..2.0)).collect()
}

fn weights(rng: &mut ChaCha8Rng, k: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..k).map(|_| rng.gen_range(0.01..1.0)).collect();
    let s: f64 = raw.iter().sum();
    raw.iter().map(|w| w / s).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn zero_gamma_is_bit_exact_noop(seed in any::<u64>(), k in 1usize..5, block in 1usize..=4) {
        let m = model(seed, SteeringConfig::scalar(k, 0.0, block), vec![0.0; dims().hidden]);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 1);
        let q = m.encode(&input(&mut rng)).unwrap();
        let nbrs: Vec<_> = (0..k).map(|_| m.encode(&input(&mut rng)).unwrap()).collect();
        let w = weights(&mut rng, k);
        let pairs: Vec<(f64, &_)> = w.iter().copied().zip(nbrs.iter()).collect();
        let s = m.steer(&q, &pairs).unwrap();
        prop_assert_eq!(&s.h, &q.h);
    }

    #[test]
    fn neighbours_equal_to_query_are_identity(seed in any::<u64>(), k in 1usize..5, gamma in -2.0f64..2.0) {
        let cfg = SteeringConfig::split(k, 4, 2, 0.7);
        let m = model(seed, cfg, vec![gamma; dims().hidden]);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 2);
        let q = m.encode(&input(&mut rng)).unwrap();
        let copies = vec![q.clone(); k];
        let w = weights(&mut rng, k);
        let pairs: Vec<(f64, &_)> = w.iter().copied().zip(copies.iter()).collect();
        let s = m.steer(&q, &pairs).unwrap();
        prop_assert_eq!(&s.h, &q.h);
    }

    #[test]
    fn single_injection_equals_split_with_zero_share(seed in any::<u64>(), gamma in -1.0f64..1.0, k in 1usize..4) {
        let one = SteeringConfig::scalar(k, gamma, 3);
        let mut two = one.clone();
        two.injections.push(Injection { block: 1, share: 0.0 });
        let a = model(seed, one, vec![gamma; dims().hidden]);
        let b = Model { steering: Some(Steering { config: two, gamma: vec![gamma; dims().hidden] }), ..a.clone() };
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 3);
        let q = a.encode(&input(&mut rng)).unwrap();
        let nbrs: Vec<_> = (0..k).map(|_| a.encode(&input(&mut rng)).unwrap()).collect();
        let w = weights(&mut rng, k);
        let pairs: Vec<(f64, &_)> = w.iter().copied().zip(nbrs.iter()).collect();
        prop_assert_eq!(&a.steer(&q, &pairs).unwrap().h, &b.steer(&q, &pairs).unwrap().h);
    }

    #[test]
    fn unit_gamma_single_neighbour_replaces_last_block(seed in any::<u64>()) {
        let blocks = dims().blocks;
        let m = model(seed, SteeringConfig::scalar(1, 1.0, blocks), vec![1.0; dims().hidden]);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 4);
        let q = m.encode(&input(&mut rng)).unwrap();
        let n = m.encode(&input(&mut rng)).unwrap();
        let s = m.steer(&q, &[(1.0, &n)]).unwrap();
        for (a, b) in s.last().iter().zip(n.last()) {
            prop_assert!((a - b).abs() <= 1e-12 * b.abs().max(1.0));
        }
        prop_assert_eq!(&s.h[..blocks], &q.h[..blocks]);
    }
}

#[test]
fn diagonal_config_round_trips_through_checkpoint() {
    let cfg = SteeringConfig {
        k: 3,
        gamma: GammaMode::Diagonal,
        injections: vec![Injection { block: 4, share: 1.0 }],
    };
    let m = model(9, cfg, (0..8).map(|i| i as f64 * 0.01).collect());
    let back = Model::from_json(&m.to_json()).unwrap();
    assert_eq!(back, m);
}

#[test]
fn refit_does_not_increase_training_mse_on_steered_features() {
    use slackcast::bank::{build_bank, BankEntry};
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let unit = |rng: &mut ChaCha8Rng| {
        let v: Vec<f64> = (0..slackcast_stage1::PHI_DIM).map(|_| rng.gen_range(0.0..1.0)).collect();
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        v.iter().map(|x| x / n).collect::<Vec<f64>>()
    };
    let d = Dims {
        input: slackcast::features::INPUT_DIM,
        ..dims()
    };
    let entries: Vec<BankEntry> = (0..20)
        .map(|i| {
            let fp = unit(&mut rng);
            BankEntry {
                id: format!("b{i}"),
                phi: fp.iter().map(|v| v * 10.0).collect(),
                fingerprint: fp,
                token_hash: format!("h{i}"),
            }
        })
        .collect();
    let bank = build_bank(entries).unwrap();
    let train: Vec<Sample> = (0..40)
        .map(|i| {
            let fp = unit(&mut rng);
            let phi: Vec<f64> = fp.iter().map(|v| v * 10.0).collect();
            Sample {
                query: Query {
                    id: Some(format!("t{i}")),
                    x: slackcast::features::encoder_input(&phi, 300.0, 1.0),
                    fingerprint: fp,
                },
                target: [rng.gen_range(-200.0..100.0), rng.gen_range(-900.0..0.0)],
            }
        })
        .collect();
    for seed in 0..5 {
        let mut m = model(seed, SteeringConfig::scalar(2, 0.3, d.blocks), vec![0.3; d.hidden]);
        m.encoder = Encoder::init(d, &mut ChaCha8Rng::seed_from_u64(seed));
        let view = BankActivations::new(&m, &bank);
        let hp = TrainParams {
            dims: d,
            max_epochs: 60,
            seed,
            ..TrainParams::default()
        };
        let stale = train_mse(&m, Some(&view), &train).unwrap();
        let (refit, _) = refit_head(&m, Some(&view), &train, &hp).unwrap();
        let after = train_mse(&refit, Some(&view), &train).unwrap();
        assert!(after <= stale, "seed {seed}: {after} > {stale}");
        assert_eq!(refit.encoder_checksum(), m.encoder_checksum());
        assert_eq!(refit.gamma_checksum(), m.gamma_checksum());
    }
}
