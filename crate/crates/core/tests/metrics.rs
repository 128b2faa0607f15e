mod common;

use common::{brute_force_counts, brute_force_metrics};
use miqa_pns::objective::QualityLabel;
use miqa_pns::train::{f1_score, predicted_labels, ConfusionMatrix};
use proptest::prelude::*;

fn labels(n: usize) -> impl Strategy<Value = Vec<QualityLabel>> {
    proptest::collection::vec(prop_oneof![Just(QualityLabel::Good), Just(QualityLabel::Deficient)], n)
}

fn pairs() -> impl Strategy<Value = (Vec<QualityLabel>, Vec<QualityLabel>)> {
    (0usize..40).prop_flat_map(|n| (labels(n), labels(n)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn confusion_matches_enumeration((pred, truth) in pairs()) {
        let cm = ConfusionMatrix::from_predictions(&pred, &truth);
        let counts = brute_force_counts(&pred, &truth);
        prop_assert_eq!([cm.true_good, cm.false_good, cm.missed_good, cm.true_deficient], counts);
        let got = [cm.precision(), cm.recall(), cm.f1(), cm.deficient_accuracy()];
        prop_assert_eq!(got, brute_force_metrics(&pred, &truth));
        for v in got {
            prop_assert!((0.0..=1.0).contains(&v));
        }
    }

    #[test]
    fn f1_is_the_harmonic_mean(p in 0.0f64..=1.0, r in 0.0f64..=1.0) {
        let f = f1_score(p, r);
        if p + r > 0.0 {
            prop_assert_eq!(f, 2.0 * p * r / (p + r));
            prop_assert!(f >= p.min(r) - 1e-15 && f <= p.max(r) + 1e-15);
        } else {
            prop_assert_eq!(f, 0.0);
        }
    }

    #[test]
    fn argmax_prefers_the_larger_logit(z in proptest::collection::vec(-10.0f64..10.0, 0..20)) {
        let z = &z[..z.len() / 2 * 2];
        for (l, row) in predicted_labels(z).iter().zip(z.chunks_exact(2)) {
            let want = if row[0] >= row[1] { QualityLabel::Good } else { QualityLabel::Deficient };
            prop_assert_eq!(*l, want);
        }
    }
}

#[test]
fn rounded_scores_are_self_consistent() {
    let f1 = f1_score(0.838, 0.876);
    assert_eq!(format!("{f1:.3}"), "0.857");
}
