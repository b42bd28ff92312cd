use fingertact::geometry::{SurfacePoint, SurfaceRegion};
use fingertact::harness::*;
use proptest::prelude::*;

fn point(x: f64, y: f64, z: f64) -> SurfacePoint {
    SurfacePoint { x, y, z, region: SurfaceRegion::Sphere }
}

fn trial(object: &str, position: PositionLabel, error: Option<f64>) -> TrialResult {
    TrialResult {
        object: object.into(),
        position,
        predicted: error.map(|e| point(e, 0.0, 37.5)),
        truth: Some(point(0.0, 0.0, 37.5)),
        error_mm: error,
        status: if error.is_some() { TrialStatus::Ok } else { TrialStatus::NoContact },
    }
}

fn trial_set() -> impl Strategy<Value = Vec<TrialResult>> {
    prop::collection::vec(
        (0usize..4, 0usize..8, prop::option::weighted(0.85, 0.0..20.0f64)),
        0..40,
    )
    .prop_map(|raw| {
        raw.into_iter()
            .map(|(o, p, e)| trial(["cone", "tube", "slab", "edge"][o], PositionLabel::ALL[p], e))
            .collect()
    })
}

proptest! {
    #[test]
    fn overall_mean_is_the_weighted_mean_of_object_means(trials in trial_set(), population in any::<bool>()) {
        let std = if population { StdKind::Population } else { StdKind::Sample };
        let report = AggregateReport::from_trials(&trials, std);
        let (mut sum, mut n) = (0.0, 0usize);
        for c in &report.per_object {
            if let Some(m) = c.mean_mm {
                sum += m * c.n as f64;
                n += c.n;
            }
        }
        prop_assert_eq!(n, report.trials_ok);
        prop_assert_eq!(report.trials_ok + report.trials_excluded, trials.len());
        match report.overall_mean_mm {
            Some(m) => prop_assert!((m - sum / n as f64).abs() < 1e-9),
            None => prop_assert_eq!(n, 0),
        }
        let by_position: usize = report.per_position.iter().map(|c| c.n + c.excluded).sum();
        prop_assert_eq!(by_position, trials.len());
    }

    #[test]
    fn json_reports_round_trip(trials in trial_set()) {
        let report = AggregateReport::from_trials(&trials, StdKind::Sample);
        let text = emit_report(&report, ReportFormat::Json).unwrap();
        let parsed: AggregateReport = serde_json::from_str(&text).unwrap();
        prop_assert_eq!(emit_report(&parsed, ReportFormat::Json).unwrap(), text);
        let close = |a: Option<f64>, b: Option<f64>| match (a, b) {
            (Some(a), Some(b)) => (a - b).abs() <= 1e-5 * a.abs().max(1e-300),
            (a, b) => a == b,
        };
        prop_assert!(close(parsed.overall_mean_mm, report.overall_mean_mm));
        for (p, r) in parsed.per_object.iter().chain(&parsed.per_position).zip(report.per_object.iter().chain(&report.per_position)) {
            prop_assert_eq!(&p.label, &r.label);
            prop_assert_eq!((p.n, p.excluded), (r.n, r.excluded));
            prop_assert!(close(p.mean_mm, r.mean_mm) && close(p.std_mm, r.std_mm));
        }
    }

    #[test]
    fn point_distance_is_a_metric(
        a in prop::array::uniform3(-20.0..20.0f64),
        b in prop::array::uniform3(-20.0..20.0f64),
    ) {
        let (p, q) = (point(a[0], a[1], a[2]), point(b[0], b[1], b[2]));
        prop_assert_eq!(p.distance(&q), q.distance(&p));
        prop_assert!(p.distance(&q) >= 0.0);
        prop_assert_eq!(p.distance(&p), 0.0);
    }
}

#[test]
fn single_trial_cell_has_zero_spread() {
    let cell = Cell::from_errors("cone", &[3.63], 0, StdKind::Sample);
    assert_eq!(cell.formatted(), "3.63 ± 0.00");
}

#[test]
fn empty_object_list_gives_an_empty_report() {
    let exp = fingertact::config::RunConfig::default().experiment().unwrap();
    let outcome = exp.run(&[]).unwrap();
    assert!(outcome.trials.is_empty());
    assert!(outcome.report.per_object.is_empty());
    assert!(outcome.report.per_position.is_empty());
    assert_eq!(outcome.report.overall_mean_mm, None);
}

#[test]
fn unknown_format_is_a_usage_error() {
    assert!(matches!("xlsx".parse::<ReportFormat>(), Err(fingertact::Error::Usage(_))));
}

#[test]
fn markdown_states_the_estimator_and_exclusions() {
    let trials = [trial("cone", PositionLabel::Rot0, Some(1.0)), trial("cone", PositionLabel::Rot0, None)];
    let md = emit_report(&AggregateReport::from_trials(&trials, StdKind::Population), ReportFormat::Markdown).unwrap();
    assert!(md.contains("population std"));
    assert!(md.contains("n=1 (excl. 1)"));
}
