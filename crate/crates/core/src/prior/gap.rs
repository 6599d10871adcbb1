//! Validation-versus-test gap of two evaluation reports.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::eval::{EvalClass, EvalReport};

#[derive(Debug, Error, PartialEq)]
pub enum GapError {
    #[error("reports cover different classes: {val:?} vs {test:?}")]
    ClassMismatch {
        val: Vec<EvalClass>,
        test: Vec<EvalClass>,
    },
}

/// Per-class differences, test minus validation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapRow {
    pub class: EvalClass,
    pub delta_map: Option<f64>,
    pub delta_macc: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapReport {
    pub rows: Vec<GapRow>,
    pub delta_mapc: Option<f64>,
    pub delta_macc: Option<f64>,
}

fn delta(val: Option<f64>, test: Option<f64>) -> Option<f64> {
    Some(test? - val?)
}

/// `Δ = metric(test) − metric(val)` for each class and for the aggregates.
/// Undefined values on either side yield an undefined delta.
pub fn gap_compare(val: &EvalReport, test: &EvalReport) -> Result<GapReport, GapError> {
    let classes = |r: &EvalReport| r.classes.iter().map(|c| c.class).collect::<Vec<_>>();
    if classes(val) != classes(test) {
        return Err(GapError::ClassMismatch {
            val: classes(val),
            test: classes(test),
        });
    }
    let rows = val
        .classes
        .iter()
        .zip(&test.classes)
        .map(|(v, t)| GapRow {
            class: v.class,
            delta_map: delta(v.map, t.map),
            delta_macc: delta(v.macc, t.macc),
        })
        .collect();
    Ok(GapReport {
        rows,
        delta_mapc: delta(val.mapc, test.mapc),
        delta_macc: delta(val.macc, test.macc),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::ClassReport;

    fn report(classes: &[EvalClass], macc: f64) -> EvalReport {
        EvalReport {
            classes: classes
                .iter()
                .map(|&class| ClassReport {
                    class,
                    ap_ls: None,
                    ap_pc: None,
                    map: None,
                    acc_pos: None,
                    acc_neg: None,
                    macc: Some(macc),
                })
                .collect(),
            map: None,
            mapc: None,
            macc: Some(macc),
            notes: vec![],
        }
    }

    #[test]
    fn identical_reports_have_zero_gap() {
        let r = report(&EvalClass::FULL, 70.0);
        let g = gap_compare(&r, &r).unwrap();
        assert_eq!(g.delta_macc, Some(0.0));
        assert!(g.rows.iter().all(|row| row.delta_macc == Some(0.0)));
        assert_eq!(g.delta_mapc, None);
    }

    #[test]
    fn class_mismatch() {
        let a = report(&EvalClass::FULL, 70.0);
        let b = report(&EvalClass::BINARY, 70.0);
        assert!(matches!(
            gap_compare(&a, &b),
            Err(GapError::ClassMismatch { .. })
        ));
    }
}
