use super::{Classifier, Dataset};

/// Per-class F1 with `0` for classes that are neither present nor predicted.
pub fn per_class_f1(predicted: &[usize], truth: &[usize], n_classes: usize) -> Vec<f64> {
    let mut tp = vec![0usize; n_classes];
    let mut fp = vec![0usize; n_classes];
    let mut fn_ = vec![0usize; n_classes];
    for (&p, &t) in predicted.iter().zip(truth) {
        if p == t {
            tp[p] += 1;
        } else {
            fp[p] += 1;
            fn_[t] += 1;
        }
    }
    (0..n_classes)
        .map(|c| {
            let denom = 2 * tp[c] + fp[c] + fn_[c];
            if denom == 0 {
                0.0
            } else {
                2.0 * tp[c] as f64 / denom as f64
            }
        })
        .collect()
}

/// Unweighted mean of the per-class F1 scores.
pub fn macro_f1_from_predictions(predicted: &[usize], truth: &[usize], n_classes: usize) -> f64 {
    let f1 = per_class_f1(predicted, truth, n_classes);
    f1.iter().sum::<f64>() / n_classes as f64
}

pub fn macro_f1(model: &Classifier, eval: &Dataset) -> f64 {
    let predicted: Vec<usize> = (0..eval.len())
        .map(|i| model.predict(eval.row(i)))
        .collect();
    macro_f1_from_predictions(&predicted, eval.labels(), eval.n_classes())
}
