use proptest::prelude::*;
use slackcast::bank::{build_bank, Bank, BankEntry};
use slackcast::Error;
use slackcast_stage1::PHI_DIM;

fn normalize(v: Vec<f64>) -> Vec<f64> {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.into_iter().map(|x| x / n).collect()
}

fn entry(id: String, fp: Vec<f64>) -> BankEntry {
    BankEntry {
        token_hash: format!("hash-{id}"),
        id,
        phi: fp.clone(),
        fingerprint: fp,
    }
}

fn fingerprint() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0f64..1.0, PHI_DIM)
        .prop_filter("non-zero", |v| v.iter().map(|x| x * x).sum::<f64>() > 1e-6)
        .prop_map(normalize)
}

fn bank_and_query() -> impl Strategy<Value = (Vec<Vec<f64>>, Vec<f64>, usize)> {
    (prop::collection::vec(fingerprint(), 1..40), fingerprint(), 1usize..8)
}

fn make(fps: &[Vec<f64>]) -> Bank {
    build_bank(fps.iter().enumerate().map(|(i, f)| entry(format!("e{i:03}"), f.clone())).collect()).unwrap()
}

/// Independent reference: full sort by (similarity desc, id asc), naive softmax.
fn brute_force(fps: &[Vec<f64>], q: &[f64], k: usize) -> Vec<(String, f64, f64)> {
    let mut all: Vec<(String, f64)> = fps
        .iter()
        .enumerate()
        .map(|(i, f)| (format!("e{i:03}"), f.iter().zip(q).map(|(a, b)| a * b).sum()))
        .collect();
    all.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then_with(|| a.0.cmp(&b.0)));
    all.truncate(k);
    let z: f64 = all.iter().map(|(_, s)| s.exp()).sum();
    all.into_iter().map(|(id, s)| (id, s, s.exp() / z)).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn retrieve_matches_brute_force((fps, q, k) in bank_and_query()) {
        let got = make(&fps).retrieve(&q, k).unwrap();
        let want = brute_force(&fps, &q, k);
        prop_assert_eq!(got.len(), want.len());
        for (n, (id, sim, w)) in got.neighbors.iter().zip(&want) {
            prop_assert_eq!(&n.id, id);
            prop_assert!((n.sim - sim).abs() <= 1e-12);
            prop_assert!((n.weight - w).abs() <= 1e-12);
        }
    }

    #[test]
    fn similarities_bounded_and_weights_on_simplex((fps, q, k) in bank_and_query()) {
        let got = make(&fps).retrieve(&q, k).unwrap();
        let mut sum = 0.0;
        for n in &got.neighbors {
            prop_assert!((-1.0 - 1e-12..=1.0 + 1e-12).contains(&n.sim));
            prop_assert!(n.weight >= 0.0);
            sum += n.weight;
        }
        prop_assert!((sum - 1.0).abs() <= 1e-12);
        for w in got.neighbors.windows(2) {
            prop_assert!(w[0].sim >= w[1].sim);
        }
    }

    #[test]
    fn self_hit_has_unit_similarity(fps in prop::collection::vec(fingerprint(), 1..30), pick in any::<prop::sample::Index>()) {
        let i = pick.index(fps.len());
        let got = make(&fps).retrieve(&fps[i], 1).unwrap();
        prop_assert!((got.neighbors[0].sim - 1.0).abs() <= 1e-9);
    }

    #[test]
    fn self_exclusion_never_returns_the_query((fps, q, k) in bank_and_query(), pick in any::<prop::sample::Index>()) {
        prop_assume!(fps.len() > 1);
        let id = format!("e{:03}", pick.index(fps.len()));
        let got = make(&fps).self_exclusion(&id, &q, k).unwrap();
        prop_assert!(got.neighbors.iter().all(|n| n.id != id));
        prop_assert_eq!(got.len(), k.min(fps.len() - 1));
    }

    #[test]
    fn equal_similarities_give_uniform_weights(fp in fingerprint(), copies in 1usize..10) {
        let fps = vec![fp.clone(); copies];
        let got = make(&fps).retrieve(&fp, copies).unwrap();
        for n in &got.neighbors {
            prop_assert!((n.weight - 1.0 / copies as f64).abs() <= 1e-12);
        }
    }

    #[test]
    fn result_is_independent_of_insertion_order((fps, q, k) in bank_and_query()) {
        let forward = make(&fps);
        let mut rev: Vec<BankEntry> = fps.iter().enumerate().map(|(i, f)| entry(format!("e{i:03}"), f.clone())).collect();
        rev.reverse();
        let reversed = build_bank(rev).unwrap();
        prop_assert_eq!(forward.retrieve(&q, k).unwrap(), reversed.retrieve(&q, k).unwrap());
    }
}

#[test]
fn disjointness_rejects_shared_id_and_shared_hash() {
    let fp = normalize(vec![1.0; PHI_DIM]);
    let bank_entries = || vec![entry("a".into(), fp.clone()), entry("b".into(), fp.clone())];
    let by_id = Bank::build_disjoint(bank_entries(), &[("a".into(), "other".into())]);
    assert!(matches!(by_id, Err(Error::DisjointnessViolation(_))));
    let by_hash = Bank::build_disjoint(bank_entries(), &[("t".into(), "hash-b".into())]);
    assert!(matches!(by_hash, Err(Error::DisjointnessViolation(_))));
    let ok = Bank::build_disjoint(bank_entries(), &[("t".into(), "fresh".into())]).unwrap();
    ok.verify_train(["t"]).unwrap();
    assert!(ok.verify_train(["u"]).is_err());
}

#[test]
fn bank_file_round_trips() {
    let fps: Vec<Vec<f64>> = (0..5).map(|i| normalize((0..PHI_DIM).map(|j| ((i * 7 + j) % 5) as f64 + 0.5).collect())).collect();
    let bank = Bank::build_disjoint(fps.iter().enumerate().map(|(i, f)| entry(format!("e{i}"), f.clone())).collect(), &[]).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("bank.jsonl");
    bank.write(&p).unwrap();
    let back = Bank::load(&p).unwrap();
    assert_eq!(back, bank);
    assert_eq!(back.checksum(), bank.checksum());
}
