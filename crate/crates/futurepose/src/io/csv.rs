//! CSV report writers. Column orders are fixed and part of the interface.

use crate::train::{EpochEval, MetricRow};
use crate::Real;

/// One row per outer optimizer step. Discriminator columns report the last
/// of the k discriminator iterations in that step.
pub const METRICS_CSV_HEADER: &str =
    "step,d_total,g_total,q_total,consistency,diversity,energy,bone,d_gan,g_gan,q_gan,grad_penalty";

pub fn metrics_csv(rows: &[MetricRow]) -> String {
    let mut out = String::from(METRICS_CSV_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{}\n",
            r.step,
            r.d_total,
            r.g_total,
            r.q_total,
            r.consistency,
            r.diversity,
            r.energy,
            r.bone,
            r.d_gan,
            r.g_gan,
            r.q_gan,
            r.grad_penalty
        ));
    }
    out
}

pub fn accuracy_csv(train: &[Real], test: &[Real]) -> String {
    assert_eq!(train.len(), test.len());
    let mut out = String::from("epoch,train_accuracy,test_accuracy\n");
    for (i, (tr, te)) in train.iter().zip(test).enumerate() {
        out.push_str(&format!("{},{tr},{te}\n", i + 1));
    }
    out
}

/// Rows are true classes, columns are predictions.
pub fn confusion_csv(confusion: &[Vec<usize>]) -> String {
    let classes = confusion.len();
    let mut out = String::from("true_class");
    for c in 0..classes {
        out.push_str(&format!(",pred_{c}"));
    }
    out.push('\n');
    for (label, row) in confusion.iter().enumerate() {
        out.push_str(&label.to_string());
        for v in row {
            out.push_str(&format!(",{v}"));
        }
        out.push('\n');
    }
    out
}

pub fn eval_csv(evals: &[EpochEval]) -> String {
    let mut out = String::from(
        "epoch,bone_error_m,quality_real_mean,quality_fake_mean,selection_count\n",
    );
    for e in evals {
        let count = e.selection_count.map_or(String::from("-"), |c| c.to_string());
        out.push_str(&format!(
            "{},{},{},{},{count}\n",
            e.epoch, e.bone_error_m, e.quality_real_mean, e.quality_fake_mean
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn metrics_header_has_fixed_column_order() {
        let row = MetricRow {
            step: 1,
            d_total: 1.0,
            g_total: 2.0,
            q_total: 3.0,
            consistency: 4.0,
            diversity: 5.0,
            energy: 6.0,
            bone: 7.0,
            d_gan: 8.0,
            g_gan: 9.0,
            q_gan: 10.0,
            grad_penalty: 11.0,
        };
        let text = metrics_csv(&[row]);
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), METRICS_CSV_HEADER);
        assert_eq!(lines.next().unwrap(), "1,1,2,3,4,5,6,7,8,9,10,11");
    }

    #[test]
    fn confusion_csv_shape() {
        let text = confusion_csv(&[vec![3, 1], vec![0, 4]]);
        assert_eq!(text, "true_class,pred_0,pred_1\n0,3,1\n1,0,4\n");
    }
}
