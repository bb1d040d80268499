use indexmap::IndexMap;
use ipl::eval::{quality_score, QualityError, QualityFeatureVector, QualityWeights, FEATURE_COUNT, FEATURE_NAMES};
use proptest::prelude::*;

fn features() -> impl Strategy<Value = [f64; FEATURE_COUNT]> {
    prop::array::uniform11(0.0f64..=1.0)
}

fn weights() -> impl Strategy<Value = [f64; FEATURE_COUNT]> {
    prop::array::uniform11(0.0f64..1.0).prop_filter("nonzero", |w| w.iter().sum::<f64>() > 1e-3).prop_map(|w| {
        let s: f64 = w.iter().sum();
        let mut out = w.map(|x| x / s);
        // Put the rounding residue on the largest weight so the sum is 1 within 1e-12.
        let residue = 1.0 - out.iter().sum::<f64>();
        let i = (0..FEATURE_COUNT).max_by(|&a, &b| out[a].total_cmp(&out[b])).unwrap();
        out[i] += residue;
        out
    })
}

fn score(x: [f64; FEATURE_COUNT], w: [f64; FEATURE_COUNT]) -> f64 {
    quality_score(&QualityFeatureVector::new(x).unwrap(), &QualityWeights::from_array(w).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn equals_weighted_sum(x in features(), w in weights()) {
        let want: f64 = x.iter().zip(&w).map(|(a, b)| a * b).sum();
        prop_assert!((score(x, w) - want).abs() < 1e-12);
        prop_assert!((-1e-12..=1.0 + 1e-12).contains(&score(x, w)));
    }

    #[test]
    fn linear_in_features(x in features(), y in features(), w in weights(), a in 0.0f64..=1.0) {
        let mut z = [0.0; FEATURE_COUNT];
        for i in 0..FEATURE_COUNT {
            z[i] = (a * x[i] + (1.0 - a) * y[i]).clamp(0.0, 1.0);
        }
        let mixed = a * score(x, w) + (1.0 - a) * score(y, w);
        prop_assert!((score(z, w) - mixed).abs() < 1e-12);
    }

    #[test]
    fn linear_in_weights(x in features(), w1 in weights(), w2 in weights(), a in 0.0f64..=1.0) {
        let mut w = [0.0; FEATURE_COUNT];
        for i in 0..FEATURE_COUNT {
            w[i] = a * w1[i] + (1.0 - a) * w2[i];
        }
        prop_assume!(QualityWeights::from_array(w).is_ok());
        let mixed = a * score(x, w1) + (1.0 - a) * score(x, w2);
        prop_assert!((score(x, w) - mixed).abs() < 1e-12);
    }

    #[test]
    fn monotone_per_feature(x in features(), w in weights(), i in 0..FEATURE_COUNT, bump in 0.0f64..=1.0) {
        let mut y = x;
        y[i] = (x[i] + bump).min(1.0);
        let (before, after) = (score(x, w), score(y, w));
        prop_assert!(after >= before - 1e-15);
        if w[i] > 1e-6 && y[i] > x[i] + 1e-6 {
            prop_assert!(after > before);
        }
    }
}

#[test]
fn weight_validation() {
    let mut w = [1.0 / FEATURE_COUNT as f64; FEATURE_COUNT];
    assert!(QualityWeights::from_array(w).is_ok());
    w[0] += 0.01;
    assert!(matches!(QualityWeights::from_array(w), Err(QualityError::WeightSum(_))));
    let mut neg = [0.1; FEATURE_COUNT];
    neg[0] = -0.1;
    neg[1] = 0.2;
    assert!(matches!(QualityWeights::from_array(neg), Err(QualityError::NegativeWeight { .. })));
    let mut nan = [0.0; FEATURE_COUNT];
    nan[0] = f64::NAN;
    assert!(QualityWeights::from_array(nan).is_err());

    let full: IndexMap<String, f64> = FEATURE_NAMES.iter().map(|n| (n.to_string(), 1.0 / FEATURE_COUNT as f64)).collect();
    assert!(QualityWeights::from_map(&full).is_ok());
    let mut missing = full.clone();
    missing.shift_remove("video_present");
    assert!(matches!(QualityWeights::from_map(&missing), Err(QualityError::WeightMismatch { .. })));
    let mut unknown = full.clone();
    unknown.insert("sparkle".into(), 0.0);
    assert!(matches!(QualityWeights::from_map(&unknown), Err(QualityError::WeightMismatch { .. })));
    assert!(QualityWeights::from_json("{\"category_accuracy\": 1.0}").is_err());
    assert!(QualityWeights::from_json("not json").is_err());
}

#[test]
fn features_must_be_in_unit_interval() {
    let mut x = [0.5; FEATURE_COUNT];
    x[3] = 1.5;
    assert!(matches!(QualityFeatureVector::new(x), Err(QualityError::FeatureOutOfRange { .. })));
    x[3] = f64::NAN;
    assert!(QualityFeatureVector::new(x).is_err());
}
