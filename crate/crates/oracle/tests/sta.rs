mod enumerate;

use enumerate::{endpoint_slacks, enumerate_wns_tns};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use slackcast_oracle::sta::{summarize, EndKind, StartKind};
use slackcast_oracle::{critical_paths, label, run_sta, CellLibrary, PathRecord, TimingConstraint, TimingReport};
use slackcast_rtl::netlist::{Gate, GateType, NetId, Netlist, OutputBit, Signal};
use slackcast_rtl::random::random_netlist;
use slackcast_rtl::synthesize;

fn clk(p: f64) -> TimingConstraint {
    TimingConstraint::new(p).unwrap()
}

#[test]
fn inverter_chain() {
    let n = Netlist {
        name: "chain".into(),
        nets: vec!["a".into(), "n0".into(), "n1".into()],
        inputs: vec![NetId(0)],
        outputs: vec![OutputBit { name: "y".into(), driver: Signal::Net(NetId(2)) }],
        gates: vec![
            Gate { kind: GateType::Inv, inputs: vec![NetId(0)], output: NetId(1) },
            Gate { kind: GateType::Inv, inputs: vec![NetId(1)], output: NetId(2) },
        ],
        flops: vec![],
    };
    let r = run_sta(&n, &CellLibrary::default_lib45(), "typ", clk(1000.0)).unwrap();
    assert_eq!(r.paths.len(), 1);
    let p = &r.paths[0];
    assert_eq!((p.arrival, p.required, p.slack), (20.0, 1000.0, 980.0));
    assert_eq!(p.gates, vec![0, 1]);
    assert_eq!((p.startpoint.as_str(), p.start_kind, p.end_kind), ("a", StartKind::Input, EndKind::Output));
    assert_eq!((r.wns, r.tns), (980.0, 0.0));
}

#[test]
fn tns_sums_negative_endpoints_only() {
    assert_eq!(summarize([-130.0, -20.0, 50.0], 1000.0), (-130.0, -150.0));
    assert_eq!(summarize([], 1000.0), (1000.0, 0.0));
}

#[test]
fn empty_netlist_reports_clock_period() {
    let n = Netlist { name: "empty".into(), ..Default::default() };
    let r = run_sta(&n, &CellLibrary::default_lib45(), "typ", clk(750.0)).unwrap();
    assert!(r.paths.is_empty());
    assert_eq!((r.wns, r.tns), (750.0, 0.0));
}

fn fake_path(end: &str, start: &str, slack: f64) -> PathRecord {
    PathRecord {
        startpoint: start.into(),
        start_kind: StartKind::Input,
        endpoint: end.into(),
        end_kind: EndKind::Output,
        gates: vec![],
        arrival: 0.0,
        required: slack,
        slack,
    }
}

fn fake_report(mut paths: Vec<PathRecord>) -> TimingReport {
    paths.sort_by(slackcast_oracle::sta::path_order);
    let (wns, tns) = summarize(paths.iter().map(|p| p.slack), 100.0);
    TimingReport { constraint: clk(100.0), corner: "typ".into(), paths, wns, tns }
}

#[test]
fn critical_paths_ordering() {
    let r = fake_report(vec![fake_path("c", "x", 3.0), fake_path("a", "x", -5.0), fake_path("b", "x", -1.0)]);
    let top: Vec<f64> = critical_paths(&r, 2).iter().map(|p| p.slack).collect();
    assert_eq!(top, vec![-5.0, -1.0]);
    assert_eq!(critical_paths(&r, 10).len(), 3);

    let tied = fake_report(vec![fake_path("z", "a", -2.0), fake_path("m", "b", -2.0), fake_path("m", "a", -2.0)]);
    let names: Vec<(&str, &str)> =
        critical_paths(&tied, 3).iter().map(|p| (p.endpoint.as_str(), p.startpoint.as_str())).collect();
    assert_eq!(names, vec![("m", "a"), ("m", "b"), ("z", "a")]);
}

#[test]
fn eight_bit_adder_matches_enumeration() {
    let lib = CellLibrary::default_lib45();
    let src = "module add8(input clk, input [7:0] a, input [7:0] b, output reg [7:0] s);
                 always @(posedge clk) s <= a + b;
               endmodule";
    let n = synthesize(src).unwrap();
    for period in [200.0, 400.0, 1000.0] {
        let (wns, tns) = label(src, &lib, "typ", clk(period)).unwrap();
        assert_eq!((wns, tns), enumerate_wns_tns(&n, &lib, "typ", period));
    }
    // c1 = AND (32); c2 = XOR,AND,OR (45+32+32); c3..c7 add AND+OR (64) each;
    // s7 = XOR(p7, c7): 109 + 5*64 + 45 = 474
    let (wns, tns) = label(src, &lib, "typ", clk(1000.0)).unwrap();
    assert_eq!((wns, tns), (1000.0 - 20.0 - 474.0, 0.0));
}

#[test]
fn slow_corner_scales_every_arrival() {
    let lib = CellLibrary::default_lib45();
    let n = synthesize(
        "module m(input clk, input [3:0] a, output reg [3:0] q, output [3:0] y);
           assign y = q ^ a;
           always @(posedge clk) q <= q + a;
         endmodule",
    )
    .unwrap();
    let typ = run_sta(&n, &lib, "typ", clk(1000.0)).unwrap();
    let slow = run_sta(&n, &lib, "slow", clk(1000.0)).unwrap();
    for p in &typ.paths {
        let q = slow.paths.iter().find(|x| x.endpoint == p.endpoint).unwrap();
        assert!((q.arrival - 1.35 * p.arrival).abs() < 1e-9, "{}", p.endpoint);
    }
}

#[test]
fn report_json_uses_integer_ps() {
    let lib = CellLibrary::default_lib45();
    let n = synthesize("module m(input a, input b, output y); assign y = a ^ b; endmodule").unwrap();
    let r = run_sta(&n, &lib, "slow", clk(1000.0)).unwrap();
    let file = r.to_file();
    // 45 * 1.35 = 60.75 -> 61
    assert_eq!(file.paths[0].arrival, 61);
    let text = serde_json::to_string(&file).unwrap();
    assert!(text.contains("\"slack\":939"), "{text}");
}

#[test]
fn five_hundred_random_netlists_match_enumeration() {
    let lib = CellLibrary::default_lib45();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for i in 0..600 {
        let n = random_netlist(&mut rng, 12);
        for corner in ["typ", "slow"] {
            let period = 100.0 + (i % 7) as f64 * 40.0;
            let r = run_sta(&n, &lib, corner, clk(period)).unwrap();
            assert_eq!((r.wns, r.tns), enumerate_wns_tns(&n, &lib, corner, period), "netlist {i} {corner}");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn corner_monotonicity(seed in any::<u64>(), s1 in 0.5f64..2.0, ds in 0.01f64..1.0) {
        let mut lib = CellLibrary::default_lib45();
        lib.corners.insert("a".into(), s1);
        lib.corners.insert("b".into(), s1 + ds);
        let n = random_netlist(&mut ChaCha8Rng::seed_from_u64(seed), 12);
        let a = endpoint_slacks(&n, &lib, "a", 500.0);
        let b = endpoint_slacks(&n, &lib, "b", 500.0);
        let ra = run_sta(&n, &lib, "a", clk(500.0)).unwrap();
        let rb = run_sta(&n, &lib, "b", clk(500.0)).unwrap();
        for p in &ra.paths {
            let q = rb.paths.iter().find(|x| x.endpoint == p.endpoint).unwrap();
            prop_assert!(q.slack <= p.slack);
        }
        prop_assert_eq!(a.len(), b.len());
    }

    #[test]
    fn clock_shift_moves_every_slack(seed in any::<u64>(), p in 50.0f64..2000.0, d in 1.0f64..500.0) {
        let lib = CellLibrary::default_lib45();
        let n = random_netlist(&mut ChaCha8Rng::seed_from_u64(seed), 12);
        let a = run_sta(&n, &lib, "typ", clk(p)).unwrap();
        let b = run_sta(&n, &lib, "typ", clk(p + d)).unwrap();
        for x in &a.paths {
            let y = b.paths.iter().find(|q| q.endpoint == x.endpoint).unwrap();
            prop_assert!(((y.slack - x.slack) - d).abs() < 1e-9);
        }
    }

    #[test]
    fn report_invariants(seed in any::<u64>(), p in 20.0f64..1500.0) {
        let lib = CellLibrary::default_lib45();
        let n = random_netlist(&mut ChaCha8Rng::seed_from_u64(seed), 12);
        let r = run_sta(&n, &lib, "typ", clk(p)).unwrap();
        prop_assert!(r.tns <= 0.0);
        prop_assert!(r.tns <= r.wns.min(0.0));
        prop_assert_eq!(r.tns == 0.0, r.wns >= 0.0);
        for w in r.paths.windows(2) {
            prop_assert!(w[0].slack <= w[1].slack);
        }
        for path in &r.paths {
            prop_assert_eq!(path.slack, path.required - path.arrival);
            let launch = if path.start_kind == StartKind::Flop { lib.dff.clk_to_q } else { 0.0 };
            let sum = path.gates.iter().fold(launch, |t, g| t + lib.delay(n.gates[*g].kind));
            prop_assert_eq!(sum, path.arrival);
        }
    }
}
