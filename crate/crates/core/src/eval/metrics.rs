use std::ops::{Add, AddAssign};

use serde::{Deserialize, Serialize};

use crate::audio::FrameLabels;
use crate::error::{invalid, Error, Result};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
}

impl ConfusionCounts {
    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.tn + self.fn_
    }

    pub fn record(&mut self, pred: bool, truth: bool) {
        match (pred, truth) {
            (true, true) => self.tp += 1,
            (true, false) => self.fp += 1,
            (false, false) => self.tn += 1,
            (false, true) => self.fn_ += 1,
        }
    }
}

impl Add for ConfusionCounts {
    type Output = Self;

    fn add(self, o: Self) -> Self {
        Self {
            tp: self.tp + o.tp,
            fp: self.fp + o.fp,
            tn: self.tn + o.tn,
            fn_: self.fn_ + o.fn_,
        }
    }
}

impl AddAssign for ConfusionCounts {
    fn add_assign(&mut self, o: Self) {
        *self = *self + o;
    }
}

impl std::iter::Sum for ConfusionCounts {
    fn sum<I: Iterator<Item = Self>>(iter: I) -> Self {
        iter.fold(Self::default(), Add::add)
    }
}

pub fn confusion_slices(pred: &[bool], truth: &[bool]) -> Result<ConfusionCounts> {
    if pred.len() != truth.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} predicted frames vs {} reference frames",
            pred.len(),
            truth.len()
        )));
    }
    let mut c = ConfusionCounts::default();
    for (&p, &t) in pred.iter().zip(truth) {
        c.record(p, t);
    }
    Ok(c)
}

/// Frame-wise comparison; both sequences must share frame rate and length.
pub fn confusion(pred: &FrameLabels, truth: &FrameLabels) -> Result<ConfusionCounts> {
    if (pred.frame_rate - truth.frame_rate).abs() > 1e-9 * truth.frame_rate.abs() {
        return Err(Error::ShapeMismatch(format!(
            "frame rates differ: {} vs {} fps",
            pred.frame_rate, truth.frame_rate
        )));
    }
    confusion_slices(&pred.labels, &truth.labels)
}

/// Percentages; ratios with a zero denominator are `None`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub accuracy: f64,
    pub recall: Option<f64>,
    pub precision: Option<f64>,
    pub f_measure: Option<f64>,
    pub fpr: Option<f64>,
    pub fnr: Option<f64>,
}

fn ratio(num: u64, den: u64) -> Option<f64> {
    (den > 0).then(|| 100.0 * num as f64 / den as f64)
}

pub fn metrics(c: &ConfusionCounts) -> Result<MetricsReport> {
    if c.total() == 0 {
        return Err(invalid("cannot compute metrics from zero frames"));
    }
    let precision = ratio(c.tp, c.tp + c.fp);
    let recall = ratio(c.tp, c.tp + c.fn_);
    let f_measure = match (precision, recall) {
        (Some(p), Some(r)) if p + r > 0.0 => Some(2.0 * p * r / (p + r)),
        _ => None,
    };
    Ok(MetricsReport {
        accuracy: 100.0 * (c.tp + c.tn) as f64 / c.total() as f64,
        recall,
        precision,
        f_measure,
        fpr: ratio(c.fp, c.fp + c.tn),
        fnr: ratio(c.fn_, c.fn_ + c.tp),
    })
}

impl MetricsReport {
    /// Column names in report order.
    pub const COLUMNS: [&'static str; 6] = ["accuracy", "recall", "precision", "f_measure", "fpr", "fnr"];

    pub fn values(&self) -> [Option<f64>; 6] {
        [Some(self.accuracy), self.recall, self.precision, self.f_measure, self.fpr, self.fnr]
    }

    /// Plain-text table in the usual layout, one metric per line; undefined values print as `n/a`.
    pub fn to_table(&self) -> String {
        let names = ["Acc.(%)", "Recall(%)", "Precision(%)", "F-measure(%)", "FPR(%)", "FNR(%)"];
        names
            .iter()
            .zip(self.values())
            .map(|(n, v)| format!("{n:<14}{}\n", fmt_opt(v)))
            .collect()
    }
}

/// One decimal place, `n/a` when undefined.
pub fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "n/a".to_string(), |x| format!("{x:.1}"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn hand_counted_example() {
        let t = [true, true, false, false, true];
        let p = [true, false, false, true, true];
        let c = confusion_slices(&p, &t).unwrap();
        assert_eq!(c, ConfusionCounts { tp: 2, fp: 1, tn: 1, fn_: 1 });
        let same = confusion_slices(&t, &t).unwrap();
        assert_eq!((same.fp, same.fn_), (0, 0));
        let neg: Vec<bool> = t.iter().map(|v| !v).collect();
        let inv = confusion_slices(&neg, &t).unwrap();
        assert_eq!((inv.tp, inv.tn), (0, 0));
    }

    #[test]
    fn arithmetic_example() {
        let m = metrics(&ConfusionCounts { tp: 3, fp: 1, fn_: 1, tn: 5 }).unwrap();
        assert_eq!(m.accuracy, 80.0);
        assert_eq!(m.precision, Some(75.0));
        assert_eq!(m.recall, Some(75.0));
        assert!((m.fpr.unwrap() - 100.0 / 6.0).abs() < 1e-12);
        assert_eq!(m.fnr, Some(25.0));
        assert_eq!(m.f_measure, Some(75.0));
    }

    #[test]
    fn undefined_ratios_are_absent() {
        let m = metrics(&ConfusionCounts { tp: 0, fp: 0, tn: 4, fn_: 0 }).unwrap();
        assert_eq!(m.accuracy, 100.0);
        assert_eq!(m.fpr, Some(0.0));
        assert_eq!((m.precision, m.recall, m.fnr, m.f_measure), (None, None, None, None));
        assert!(metrics(&ConfusionCounts::default()).is_err());
        assert!(m.to_table().contains("n/a"));
    }

    #[test]
    fn mismatched_sequences_rejected() {
        let a = FrameLabels::new(70.0, vec![true; 3]).unwrap();
        let b = FrameLabels::new(57.0, vec![true; 3]).unwrap();
        assert!(confusion(&a, &b).is_err());
        assert!(confusion_slices(&[true], &[true, false]).is_err());
    }

    proptest! {
        #[test]
        fn rate_identities(tp in 0u64..50, fp in 0u64..50, tn in 0u64..50, fn_ in 0u64..50) {
            let c = ConfusionCounts { tp, fp, tn, fn_ };
            prop_assume!(c.total() > 0);
            let m = metrics(&c).unwrap();
            for v in m.values().into_iter().flatten() {
                prop_assert!((0.0..=100.0).contains(&v));
            }
            if let Some(fpr) = m.fpr {
                let tnr = 100.0 * tn as f64 / (fp + tn) as f64;
                prop_assert!((fpr + tnr - 100.0).abs() < 1e-9);
            }
            if let (Some(fnr), Some(r)) = (m.fnr, m.recall) {
                prop_assert!((fnr + r - 100.0).abs() < 1e-9);
            }
        }

        #[test]
        fn permutation_invariant(pairs in prop::collection::vec((any::<bool>(), any::<bool>()), 1..80), seed in any::<u64>()) {
            use rand::{seq::SliceRandom, SeedableRng};
            let mut shuffled = pairs.clone();
            shuffled.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
            let split = |v: &[(bool, bool)]| -> (Vec<bool>, Vec<bool>) { v.iter().copied().unzip() };
            let (p, t) = split(&pairs);
            let (ps, ts) = split(&shuffled);
            prop_assert_eq!(confusion_slices(&p, &t).unwrap(), confusion_slices(&ps, &ts).unwrap());
        }
    }
}
