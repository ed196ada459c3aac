mod common;

use proptest::prelude::*;

use subjeval::analysis::{
    analyze_counts, analyze_outcome, boxplot_stats, chance_test, mas_from_counts, pairwise_humanlikeness,
    pairwise_mas, read_count_table, write_count_table, AnalysisConfig, Cell, ChanceOutcome, ResponseCounts,
    SignificanceMatrix,
};
use subjeval::design::StudyKind;
use subjeval::stats::{correct, CorrectionMethod, Interval};

fn speech_cfg() -> AnalysisConfig {
    AnalysisConfig::for_study(StudyKind::SpeechApprop)
}

fn human_cfg() -> AnalysisConfig {
    AnalysisConfig::for_study(StudyKind::Humanlikeness)
}

#[test]
fn mas_examples() {
    let na = mas_from_counts(&ResponseCounts::new(755, 452, 185, 217, 157), 0.95).unwrap();
    assert!((na.mas - 1431.0 / 1766.0).abs() < 1e-12);
    assert!((na.mas - 0.8103).abs() < 5e-5);
    assert!((na.pref_matched - (755.0 + 452.0 + 92.5) / 1766.0).abs() < 1e-12);
    assert!((na.interval.half_width() - 0.06).abs() < 0.005);

    let sc = mas_from_counts(&ResponseCounts::new(72, 284, 1057, 314, 76), 0.95).unwrap();
    assert!((sc.mas + 0.0211).abs() < 5e-5);
    assert!((sc.pref_matched * 100.0 - 49.1).abs() < 0.05);
    assert_eq!(chance_test(&sc.interval), ChanceOutcome::NotDistinguishable);

    let eq = mas_from_counts(&ResponseCounts::new(0, 0, 40, 0, 0), 0.95).unwrap();
    assert_eq!((eq.mas, eq.pref_matched), (0.0, 0.5));
    assert_eq!(chance_test(&eq.interval), ChanceOutcome::NotDistinguishable);

    assert!(mas_from_counts(&ResponseCounts::default(), 0.95).is_err());
    assert!(mas_from_counts(&ResponseCounts::new(1, 0, 0, 0, 0), 0.95).is_err());
}

#[test]
fn chance_examples() {
    let iv = |lower, upper| Interval { lower, upper, level: 0.95 };
    assert_eq!(chance_test(&iv(-0.01, 0.01)), ChanceOutcome::NotDistinguishable);
    assert_eq!(chance_test(&iv(0.001, 0.1)), ChanceOutcome::AboveChance);
    assert_eq!(chance_test(&iv(-0.3, -0.1)), ChanceOutcome::BelowChance);
    // a lower bound that only rounds to positive does not count
    assert_eq!(chance_test(&iv(-0.004, 0.096)), ChanceOutcome::NotDistinguishable);
}

fn counts_strategy() -> impl Strategy<Value = ResponseCounts> {
    (0u64..200, 0u64..200, 0u64..200, 0u64..200, 0u64..200)
        .prop_filter("need spread", |&(a, b, c, d, e)| a + b + c + d + e >= 3 && [a, b, c, d, e].iter().filter(|&&x| x > 0).count() >= 2)
        .prop_map(|(a, b, c, d, e)| ResponseCounts::new(a, b, c, d, e))
}

fn antisymmetric_with_empty_diagonal(m: &SignificanceMatrix) -> bool {
    let n = m.conditions.len();
    m.is_antisymmetric()
        && (0..n).all(|i| m.cells[i][i] == Cell::None)
        && (0..n).all(|i| {
            (0..n).all(|j| match m.cells[i][j] {
                Cell::Above => m.cells[j][i] == Cell::Below,
                Cell::Below => m.cells[j][i] == Cell::Above,
                Cell::None => m.cells[j][i] == Cell::None,
            })
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn scaling_counts_shrinks_interval(c in counts_strategy(), k in 2u64..30) {
        let a = mas_from_counts(&c, 0.95).unwrap();
        let b = mas_from_counts(&c.scaled(k), 0.95).unwrap();
        prop_assert!((a.mas - b.mas).abs() < 1e-12);
        prop_assert!((a.pref_matched - b.pref_matched).abs() < 1e-12);
        let ratio = a.interval.half_width() / b.interval.half_width();
        let n = c.total() as f64;
        // exact ratio is sqrt(k) times a variance and t-quantile factor close to one
        let sd_factor = ((k as f64 * n - 1.0) / (k as f64 * (n - 1.0))).sqrt();
        prop_assert!(ratio >= (k as f64).sqrt() * sd_factor * 0.999, "ratio {}", ratio);
        prop_assert!(ratio <= (k as f64).sqrt() * sd_factor * 1.7, "ratio {}", ratio);
        if n >= 30.0 {
            prop_assert!((ratio / (k as f64).sqrt() - 1.0).abs() < 0.05);
        }
    }

    #[test]
    fn recounting_reconstructed_scores_is_exact(c in counts_strategy()) {
        prop_assert_eq!(ResponseCounts::from_scores(&c.to_scores()), c);
    }

    #[test]
    fn symmetric_counts_never_beat_chance(p2 in 0u64..300, p1 in 0u64..300, z in 0u64..300) {
        prop_assume!(2 * (p2 + p1) + z >= 2);
        let c = ResponseCounts::new(p2, p1, z, p1, p2);
        let m = mas_from_counts(&c, 0.95).unwrap();
        prop_assert_eq!(chance_test(&m.interval), ChanceOutcome::NotDistinguishable);
    }

    #[test]
    fn mas_matrices_are_antisymmetric(rows in prop::collection::vec(counts_strategy(), 2..7)) {
        let named: Vec<(String, ResponseCounts)> = rows.into_iter().enumerate().map(|(i, c)| (format!("C{i}"), c)).collect();
        let m = pairwise_mas(&named, &speech_cfg()).unwrap();
        prop_assert!(antisymmetric_with_empty_diagonal(&m));
    }

    #[test]
    fn rating_matrices_are_antisymmetric(
        samples in prop::collection::vec(prop::collection::vec(0u8..=100, 1..40), 2..6)
    ) {
        let named: Vec<(String, Vec<f64>)> = samples
            .into_iter()
            .enumerate()
            .map(|(i, v)| (format!("C{i}"), v.into_iter().map(f64::from).collect()))
            .collect();
        let m = pairwise_humanlikeness(&named, None, &human_cfg()).unwrap();
        prop_assert!(antisymmetric_with_empty_diagonal(&m));
    }

    #[test]
    fn uncorrected_dominates(ps in prop::collection::vec(0.0f64..1.0, 1..40), alpha in 0.001f64..0.3) {
        let none = correct(&ps, alpha, CorrectionMethod::None).unwrap().decisions;
        for method in [CorrectionMethod::HolmBonferroni, CorrectionMethod::BhFdr] {
            let d = correct(&ps, alpha, method).unwrap().decisions;
            for (a, b) in d.iter().zip(&none) {
                prop_assert!(!a || *b);
            }
        }
    }

    #[test]
    fn boxplot_is_ordered(xs in prop::collection::vec(-1e3f64..1e3, 1..200)) {
        let b = boxplot_stats(&xs).unwrap();
        prop_assert!(b.whisker_low <= b.q25 && b.q25 <= b.median && b.median <= b.q75 && b.q75 <= b.whisker_high);
    }
}

#[test]
fn identical_rows_give_no_difference() {
    let c = ResponseCounts::new(30, 40, 50, 20, 10);
    let m = pairwise_mas(&[("A".into(), c), ("B".into(), c)], &speech_cfg()).unwrap();
    assert_eq!(m.cell("A", "B"), Some(Cell::None));
    assert!(m.warnings.is_empty());
}

#[test]
fn degenerate_pair_is_left_untested_with_warning() {
    let rows = vec![
        ("A".to_string(), ResponseCounts::new(0, 0, 20, 0, 0)),
        ("B".to_string(), ResponseCounts::new(0, 0, 30, 0, 0)),
        ("C".to_string(), ResponseCounts::new(50, 10, 0, 0, 0)),
    ];
    let m = pairwise_mas(&rows, &speech_cfg()).unwrap();
    assert_eq!(m.cell("A", "B"), Some(Cell::None));
    assert_eq!(m.warnings.len(), 1);
    assert!(m.warnings[0].contains("A vs B"));
    assert_eq!(m.cell("C", "A"), Some(Cell::Above));
}

#[test]
fn disjoint_rating_supports_separate() {
    let high: Vec<f64> = (0..50).map(|i| 80.0 + (i % 21) as f64).collect();
    let low: Vec<f64> = (0..50).map(|i| (i % 21) as f64).collect();
    let m = pairwise_humanlikeness(&[("H".into(), high), ("L".into(), low)], None, &human_cfg()).unwrap();
    assert_eq!(m.cell("H", "L"), Some(Cell::Above));
    assert_eq!(m.cell("L", "H"), Some(Cell::Below));
}

#[test]
fn identical_rating_samples_have_no_cells() {
    let xs: Vec<f64> = (0..60).map(|i| ((i * 37) % 101) as f64).collect();
    let named: Vec<(String, Vec<f64>)> = (0..5).map(|i| (format!("C{i}"), xs.clone())).collect();
    let m = pairwise_humanlikeness(&named, None, &human_cfg()).unwrap();
    assert_eq!(m.significant_pairs(), 0);
    assert!(m.p_values.iter().flatten().flatten().all(|&p| (p - 1.0).abs() < 1e-12));
}

#[test]
fn empty_sample_is_an_error() {
    let r = pairwise_humanlikeness(&[("A".into(), vec![1.0]), ("B".into(), vec![])], None, &human_cfg());
    assert!(r.is_err());
}

#[test]
fn boxplot_examples() {
    let xs: Vec<f64> = (1..=100).map(f64::from).collect();
    let b = boxplot_stats(&xs).unwrap();
    assert!((b.q25 - 25.75).abs() < 1e-12);
    assert!((b.q75 - 75.25).abs() < 1e-12);
    assert!((b.median - 50.5).abs() < 1e-12);
    let c = boxplot_stats(&[7.0; 9]).unwrap();
    assert!([c.median, c.q25, c.q75, c.whisker_low, c.whisker_high, c.mean].iter().all(|&v| v == 7.0));
    assert!(boxplot_stats(&[]).is_err());
}

#[test]
fn single_condition_has_no_matrix() {
    let rows = vec![("NA".to_string(), ResponseCounts::new(5, 4, 3, 2, 1))];
    let r = analyze_counts(&rows, &speech_cfg()).unwrap();
    assert!(r.matrix.is_none());
    assert_eq!(r.summaries.len(), 1);
}

#[test]
fn na_beats_sg_in_speech_counts() {
    let rows = vec![
        ("NA".to_string(), ResponseCounts::new(755, 452, 185, 217, 157)),
        ("SG".to_string(), ResponseCounts::new(531, 486, 201, 330, 259)),
    ];
    let m = pairwise_mas(&rows, &speech_cfg()).unwrap();
    assert_eq!(m.cell("NA", "SG"), Some(Cell::Above));
}

#[test]
fn count_table_round_trip_and_sum_check() {
    let rows = subjeval::fixtures::SPEECH.counts().unwrap();
    let mut buf = Vec::new();
    write_count_table(&rows, &mut buf).unwrap();
    assert_eq!(read_count_table(buf.as_slice(), "mem").unwrap(), rows);

    let bad = "condition,plus2,plus1,zero,minus1,minus2,sum\nNA,1,1,1,1,1,6\n";
    let err = read_count_table(bad.as_bytes(), "t.csv").unwrap_err();
    assert!(err.to_string().contains("t.csv"), "{err}");
}

#[test]
fn report_json_round_trip() {
    let rows = subjeval::fixtures::DYADIC.counts().unwrap();
    let r = analyze_counts(&rows, &AnalysisConfig::for_study(StudyKind::InterlocApprop)).unwrap();
    let back = subjeval::analysis::AnalysisReport::from_json(&r.to_json().unwrap()).unwrap();
    assert_eq!(back, r);
}

#[test]
fn outcome_analysis_rejects_empty_conditions() {
    let plan = subjeval::design::design_study(
        StudyKind::Humanlikeness,
        &common::conditions(15),
        &common::segments(41, subjeval::design::Speaker::Agent),
        20,
        3,
    )
    .unwrap();
    let mut model = common::spread_model(15);
    model.attention_failure_prob = 1.0;
    let records = subjeval::sim::simulate_responses(&plan, &model, 1).unwrap();
    let out = subjeval::ingest::ingest(records, &plan);
    let err = analyze_outcome(&out, &human_cfg()).unwrap_err();
    assert!(err.to_string().contains("no retained responses"), "{err}");
}
