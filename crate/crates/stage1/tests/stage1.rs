use proptest::prelude::*;
use slackcast_rtl::{elaborate, parse};
use slackcast_stage1::phi::{SLOT_FLOPS, SLOT_PATH_TYPES};
use slackcast_stage1::{analyze, approx_report, fingerprint, StartKind, PHI_DIM};

const ADDER4: &str = "module add4(input clk, input [3:0] a, input [3:0] b, output reg [3:0] s);
  always @(posedge clk) s <= a + b;
endmodule";

const COUNTER8: &str = "module cnt8(input clk, input en, output reg [7:0] q);
  always @(posedge clk) if (en) q <= q + 8'd1;
endmodule";

fn true_depth(src: &str) -> u32 {
    elaborate(&parse(src).unwrap()).unwrap().unit_depth().unwrap()
}

#[test]
fn adder_depth_tracks_elaborated_netlist() {
    let a = analyze(ADDER4, 1000.0).unwrap();
    let approx = a.report.critical_depth();
    let exact = true_depth(ADDER4);
    assert!(approx.abs_diff(exact) <= 1, "approx {approx} vs elaborated {exact}");
    assert!(approx >= 4);
}

#[test]
fn counter_paths() {
    let a = analyze(COUNTER8, 1000.0).unwrap();
    assert_eq!(a.phi[SLOT_FLOPS], 8.0);
    assert_eq!(a.phi[SLOT_PATH_TYPES + 1], 8.0);
    assert_eq!(a.phi[SLOT_PATH_TYPES + 2], 8.0);
    assert!(a.report.paths.iter().filter(|p| p.endpoint.ends_with("/D")).all(|p| p.start_kind == StartKind::Flop));
    assert!(a.report.critical_depth().abs_diff(true_depth(COUNTER8)) <= 1);
}

#[test]
fn case_fsm_depth() {
    let src = "module fsm(input clk, input go, output reg [1:0] st);
      always @(posedge clk) case (st)
        2'd0: if (go) st <= 2'd1;
        2'd1: st <= 2'd2;
        2'd2: st <= go ? 2'd3 : 2'd0;
        default: st <= 2'd0;
      endcase
    endmodule";
    let a = analyze(src, 1000.0).unwrap();
    assert!(a.report.critical_depth().abs_diff(true_depth(src)) <= 3);
}

#[test]
fn report_is_clock_relative() {
    let ast = parse(ADDER4).unwrap();
    let slow = approx_report(&ast, 1000.0).unwrap();
    let fast = approx_report(&ast, 100.0).unwrap();
    assert_eq!(slow.wns - fast.wns, 900.0);
    assert_eq!(slow.violating, 0);
    assert!(fast.violating > 0);
}

#[test]
fn stage1_never_links_the_oracle() {
    let manifest = include_str!("../Cargo.toml");
    assert!(!manifest.contains("slackcast-oracle"));
}

#[test]
fn fingerprint_dump_shape() {
    let a = analyze(ADDER4, 1000.0).unwrap();
    let j = a.fingerprint.to_json();
    assert_eq!(j["fingerprint"].as_array().unwrap().len(), PHI_DIM);
    assert_eq!(j["layout_version"], slackcast_stage1::LAYOUT_VERSION);
}

fn phi_strategy() -> impl Strategy<Value = [f64; PHI_DIM]> {
    proptest::collection::vec(0.0f64..1e4, PHI_DIM).prop_map(|v| v.try_into().unwrap())
}

proptest! {
    #[test]
    fn unit_norm(phi in phi_strategy()) {
        let s = fingerprint(&phi).unwrap().s;
        let n = s.iter().map(|v| v * v).sum::<f64>().sqrt();
        prop_assert!((n - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn scale_invariant(phi in phi_strategy(), c in 1e-3f64..1e3) {
        let scaled = phi.map(|v| v * c);
        let a = fingerprint(&phi).unwrap().s;
        let b = fingerprint(&scaled).unwrap().s;
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x - y).abs() <= 1e-12);
        }
    }

    #[test]
    fn deterministic(width in 1u32..12, op in 0usize..4) {
        let ops = ["+", "-", "&", "^"];
        let src = format!(
            "module p(input [{m}:0] a, input [{m}:0] b, output [{m}:0] y); assign y = a {o} b; endmodule",
            m = width - 1, o = ops[op]);
        let x = analyze(&src, 500.0).unwrap();
        let y = analyze(&src, 500.0).unwrap();
        prop_assert_eq!(x.phi, y.phi);
        prop_assert!(x.report.critical_depth().abs_diff(true_depth(&src)) <= 1);
    }
}
