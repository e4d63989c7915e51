use proptest::prelude::*;

use irsem::corpus_io::{
    covariance, read_cov, read_csv, write_cov, write_csv, CovInput, CovKind, LabeledMatrix,
    VariableMatrix,
};
use irsem::model_dsl::parse_model;
use irsem::prep::{log_shift, outliers_to_mean};
use irsem::sem_engine::{build_ram, estimate, EstimateOptions};

fn columns(p: usize, n: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    prop::collection::vec(prop::collection::vec(-1e3..1e3f64, n), p)
}

fn named(cols: Vec<Vec<f64>>) -> VariableMatrix {
    let names = (0..cols.len()).map(|i| format!("v{i}")).collect();
    VariableMatrix::new(names, cols).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn csv_round_trip_is_exact(cols in columns(3, 12)) {
        let m = named(cols);
        let ids: Vec<String> = (0..m.n()).map(|i| format!("d{i}")).collect();
        let table = LabeledMatrix::new(vec![("doc_id".into(), ids)], m).unwrap();
        let back = read_csv(&write_csv(&table).unwrap(), &["doc_id"]).unwrap();
        prop_assert_eq!(back, table);
    }

    #[test]
    fn cov_file_round_trip_is_exact(cols in columns(4, 20)) {
        let m = named(cols);
        if let Ok(c) = covariance(&m, CovKind::Covariance) {
            prop_assert_eq!(read_cov(&write_cov(&c)).unwrap(), c);
        }
    }

    #[test]
    fn log_shift_minimum_is_zero(cols in columns(2, 15)) {
        let m = named(cols);
        let out = log_shift(&m, &["v0"]).unwrap();
        let min = out.column("v0").unwrap().iter().copied().fold(f64::INFINITY, f64::min);
        prop_assert_eq!(min, 0.0);
        prop_assert_eq!(out.column("v1"), m.column("v1"));
    }

    #[test]
    fn outlier_replacement_keeps_shape(cols in columns(3, 30), z in 1.0..4.0f64) {
        let m = named(cols);
        if let Ok((out, counts)) = outliers_to_mean(&m, z) {
            prop_assert_eq!(out.n(), m.n());
            prop_assert_eq!(out.names(), m.names());
            prop_assert!(counts.iter().all(|c| c.replaced <= m.n()));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn raw_and_summary_inputs_fit_identically(
        x in prop::collection::vec(-5.0..5.0f64, 40),
        e in prop::collection::vec(-1.0..1.0f64, 40),
        b in -2.0..2.0f64,
    ) {
        let y: Vec<f64> = x.iter().zip(&e).map(|(a, r)| b * a + r).collect();
        let m = VariableMatrix::from_pairs(vec![("x", x), ("y", y)]).unwrap();
        let model = parse_model("y <- x").unwrap();
        let ram = build_ram(&model, m.names()).unwrap();
        let opts = EstimateOptions::default();
        let raw = estimate(&ram, &CovInput::Raw(m.clone()), &opts).unwrap();
        let cov = covariance(&m, CovKind::Covariance).unwrap();
        let summary = estimate(&ram, &CovInput::Summary(cov), &opts).unwrap();
        for (p, q) in raw.parameters.iter().zip(&summary.parameters) {
            prop_assert_eq!(&p.id, &q.id);
            prop_assert!((p.estimate - q.estimate).abs() <= 1e-12 * p.estimate.abs().max(1.0));
        }
    }
}
