use fsta_core::backbone::MoveBudget;
use fsta_core::gen_io::{
    generate, initial_solution_sweep, parse_cvrplib, read_instance_doc, read_prediction_doc, read_solution_doc, write_cvrplib,
    write_instance_doc, write_prediction_doc, write_solution_doc, GenSpec, SweepParams,
};
use fsta_core::model::{evaluate_objective, DistanceMode, Variant};
use fsta_core::segmenter::{detect, SegmenterPolicy};
use fsta_core::Error;
use proptest::prelude::*;

const SQUARE: &str = include_str!("fixtures/square4.vrp");

#[test]
fn missing_demands_are_reported() {
    let head = &SQUARE[..SQUARE.find("DEMAND_SECTION").unwrap()];
    let text = format!("{head}DEPOT_SECTION\n1\n-1\nEOF\n");
    assert!(matches!(parse_cvrplib(&text), Err(Error::MissingSection(_))));
}

#[test]
fn malformed_numbers_name_their_line() {
    let bad = SQUARE.replace("3 80 50", "3 eighty 50");
    match parse_cvrplib(&bad) {
        Err(Error::Parse { line, .. }) => assert_eq!(line, 9),
        other => panic!("expected a parse error, got {other:?}"),
    }
}

#[test]
fn parsed_instances_use_rounded_distances() {
    let inst = parse_cvrplib(SQUARE).unwrap();
    assert_eq!(inst.distance_mode(), DistanceMode::RoundedInt);
    assert_eq!(inst.dist(1, 2), 42.0);
    assert_eq!(write_cvrplib(&inst), SQUARE);
}

fn variant() -> impl Strategy<Value = Variant> {
    prop::sample::select(Variant::ALL.to_vec())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn instance_docs_round_trip(v in variant(), n in 1usize..60, seed in 0u64..10_000) {
        let inst = generate(&GenSpec::new(v, n, 30.0, seed)).unwrap();
        let text = write_instance_doc(&inst);
        let back = read_instance_doc(&text).unwrap();
        prop_assert_eq!(&back, &inst);
        prop_assert_eq!(write_instance_doc(&back), text);
    }

    #[test]
    fn solution_and_prediction_docs_round_trip(v in variant(), n in 1usize..60, seed in 0u64..10_000, f in 0.0f64..1.0) {
        let inst = generate(&GenSpec::new(v, n, 30.0, seed)).unwrap();
        let sol = initial_solution_sweep(&inst, &SweepParams::default(), &MoveBudget::moves(50, seed)).unwrap();
        let obj = evaluate_objective(&inst, &sol).unwrap();
        let (back, obj_back) = read_solution_doc(&write_solution_doc(&sol, obj)).unwrap();
        prop_assert_eq!(back, sol.clone());
        prop_assert_eq!(obj_back, obj);

        let pred = detect(&SegmenterPolicy::Random { fraction: f.max(0.01), seed }, &inst, &sol, None).unwrap();
        let (id, set) = read_prediction_doc(&write_prediction_doc(inst.id(), &pred), inst.len()).unwrap();
        prop_assert_eq!(id, inst.id().to_string());
        prop_assert_eq!(set, pred);
    }
}
