//! Forecast error metrics on raw speeds and the zero-shot evaluation
//! protocol across time periods.

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::checkpoint::Checkpoint;
use crate::dataset::{Normalizer, WindowedBatch};
use crate::error::{Error, Result};
use crate::model::{mse_loss, StgtModel};
use crate::tensor::Tensor;

/// Readings with `|truth|` below this many mph are left out of MAPE.
pub const DEFAULT_MAPE_EPS: f64 = 1.0;

fn check(pred: &[f64], truth: &[f64]) -> Result<()> {
    if pred.len() != truth.len() {
        return Err(Error::dim(format!(
            "{} predictions vs {} ground-truth values",
            pred.len(),
            truth.len()
        )));
    }
    if pred.is_empty() {
        return Err(Error::invalid("no values to score"));
    }
    Ok(())
}

pub fn mae(pred: &[f64], truth: &[f64]) -> Result<f64> {
    check(pred, truth)?;
    Ok(pred.iter().zip(truth).map(|(p, t)| (p - t).abs()).sum::<f64>() / pred.len() as f64)
}

pub fn rmse(pred: &[f64], truth: &[f64]) -> Result<f64> {
    check(pred, truth)?;
    let mse = pred.iter().zip(truth).map(|(p, t)| (p - t) * (p - t)).sum::<f64>() / pred.len() as f64;
    Ok(mse.sqrt())
}

/// Mean absolute percentage error in percent.
pub fn mape(pred: &[f64], truth: &[f64], eps: f64) -> Result<f64> {
    check(pred, truth)?;
    let (sum, count) = pred
        .iter()
        .zip(truth)
        .filter(|(_, t)| t.abs() >= eps)
        .fold((0.0, 0usize), |(s, c), (p, t)| (s + ((p - t) / t).abs(), c + 1));
    if count == 0 {
        return Err(Error::invalid(format!(
            "every ground-truth value is below the MAPE cutoff {eps}"
        )));
    }
    Ok(100.0 * sum / count as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HorizonMetrics {
    /// 1-based step ahead.
    pub step: usize,
    pub minutes: i64,
    pub mae: f64,
    pub rmse: f64,
    pub mape: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub period: String,
    pub mode: String,
    pub mae: f64,
    pub rmse: f64,
    pub mape: f64,
    /// Mean squared error in normalised units, the training objective.
    pub loss: f64,
    pub per_horizon: Vec<HorizonMetrics>,
}

/// Raw-speed predictions and targets for a batch.
pub struct Predictions {
    pub pred: Vec<f64>,
    pub truth: Vec<f64>,
    pub horizon: usize,
    pub loss: f64,
}

/// Runs `model` over every window of a raw (un-normalised) batch.
pub fn predict_batch(model: &StgtModel, normalizer: &Normalizer, raw: &WindowedBatch) -> Result<Predictions> {
    if raw.history != model.config.history || raw.horizon != model.config.horizon {
        return Err(Error::config(format!(
            "data windows are {}→{} steps but the model expects {}→{}",
            raw.history, raw.horizon, model.config.history, model.config.horizon
        )));
    }
    if raw.num_nodes() != model.num_nodes() {
        return Err(Error::config(format!(
            "data has {} stations, model has {}",
            raw.num_nodes(),
            model.num_nodes()
        )));
    }
    let norm = normalizer.normalize(raw);
    let outs: Vec<(Tensor, f64)> = (0..norm.len())
        .into_par_iter()
        .map(|s| {
            let y = model.predict(&norm.input(s))?;
            let loss = mse_loss(&y, &norm.target(s))?;
            Ok((normalizer.denormalize(&y), loss))
        })
        .collect::<Result<_>>()?;
    let loss = outs.iter().map(|o| o.1).sum::<f64>() / outs.len() as f64;
    Ok(Predictions {
        pred: outs.into_iter().flat_map(|o| o.0.into_data()).collect(),
        truth: raw.targets.data().to_vec(),
        horizon: raw.horizon,
        loss,
    })
}

impl Predictions {
    pub fn report(&self, period: &str, mode: &str, step_minutes: i64, eps: f64) -> Result<EvalReport> {
        let per_horizon = (0..self.horizon)
            .map(|h| {
                let pick = |v: &[f64]| -> Vec<f64> { v.iter().skip(h).step_by(self.horizon).copied().collect() };
                let (p, t) = (pick(&self.pred), pick(&self.truth));
                Ok(HorizonMetrics {
                    step: h + 1,
                    minutes: (h as i64 + 1) * step_minutes,
                    mae: mae(&p, &t)?,
                    rmse: rmse(&p, &t)?,
                    mape: mape(&p, &t, eps)?,
                })
            })
            .collect::<Result<_>>()?;
        Ok(EvalReport {
            period: period.to_string(),
            mode: mode.to_string(),
            mae: mae(&self.pred, &self.truth)?,
            rmse: rmse(&self.pred, &self.truth)?,
            mape: mape(&self.pred, &self.truth, eps)?,
            loss: self.loss,
            per_horizon,
        })
    }
}

/// Scores a batch of raw windows with a trained model.
pub fn evaluate(
    model: &StgtModel,
    normalizer: &Normalizer,
    raw: &WindowedBatch,
    period: &str,
    step_minutes: i64,
) -> Result<EvalReport> {
    predict_batch(model, normalizer, raw)?.report(period, model.mode().as_str(), step_minutes, DEFAULT_MAPE_EPS)
}

/// Zero-shot evaluation: the checkpoint is applied unchanged to each period.
pub fn evaluate_transfer(checkpoint: &Checkpoint, periods: &[(String, WindowedBatch)]) -> Result<Vec<EvalReport>> {
    periods
        .iter()
        .map(|(tag, batch)| {
            evaluate(
                &checkpoint.model,
                &checkpoint.normalizer,
                batch,
                tag,
                checkpoint.step_minutes,
            )
        })
        .collect()
}

pub fn write_reports_json(path: &Path, reports: &[EvalReport]) -> Result<()> {
    let text = serde_json::to_string_pretty(reports)?;
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Table layout: one row per period and metric, one column per model mode
/// and horizon (`<mode>_<minutes>min`), plus `<mode>_all` for the mean over
/// every horizon.
pub fn write_reports_csv(path: &Path, reports: &[EvalReport]) -> Result<()> {
    let mut columns: Vec<(String, i64)> = Vec::new();
    for r in reports {
        for h in &r.per_horizon {
            if !columns.contains(&(r.mode.clone(), h.minutes)) {
                columns.push((r.mode.clone(), h.minutes));
            }
        }
        if !columns.contains(&(r.mode.clone(), 0)) {
            columns.push((r.mode.clone(), 0));
        }
    }
    let mut periods: Vec<&str> = Vec::new();
    for r in reports {
        if !periods.contains(&r.period.as_str()) {
            periods.push(&r.period);
        }
    }
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::data(format!("{}: {e}", path.display())))?;
    let mut header = vec!["period".to_string(), "metric".to_string()];
    header.extend(columns.iter().map(|(m, min)| {
        if *min == 0 {
            format!("{m}_all")
        } else {
            format!("{m}_{min}min")
        }
    }));
    w.write_record(&header)?;
    for period in periods {
        for metric in ["MAE", "RMSE", "MAPE"] {
            let mut row = vec![period.to_string(), metric.to_string()];
            for (mode, minutes) in &columns {
                let cell = reports
                    .iter()
                    .find(|r| r.period == period && &r.mode == mode)
                    .and_then(|r| {
                        let pick = |mae: f64, rmse: f64, mape: f64| match metric {
                            "MAE" => mae,
                            "RMSE" => rmse,
                            _ => mape,
                        };
                        if *minutes == 0 {
                            Some(pick(r.mae, r.rmse, r.mape))
                        } else {
                            r.per_horizon
                                .iter()
                                .find(|h| h.minutes == *minutes)
                                .map(|h| pick(h.mae, h.rmse, h.mape))
                        }
                    });
                row.push(cell.map(|v| format!("{v:.4}")).unwrap_or_default());
            }
            w.write_record(&row)?;
        }
    }
    w.flush().map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn hand_cases() {
        let a = [10.0, 20.0];
        assert_eq!((mae(&a, &a).unwrap(), rmse(&a, &a).unwrap(), mape(&a, &a, 1.0).unwrap()), (0.0, 0.0, 0.0));
        assert_eq!(mae(&[11.0], &[10.0]).unwrap(), 1.0);
        assert_eq!(rmse(&[11.0], &[10.0]).unwrap(), 1.0);
        assert!((mape(&[11.0], &[10.0], 1.0).unwrap() - 10.0).abs() < 1e-12);
        let (p, t) = ([0.0, 2.0], [1.0, 1.0]);
        assert_eq!(mae(&p, &t).unwrap(), 1.0);
        assert_eq!(rmse(&p, &t).unwrap(), 1.0);
        assert_eq!(mape(&p, &t, 1.0).unwrap(), 100.0);
    }

    #[test]
    fn mape_exclusion() {
        assert_eq!(mape(&[5.0, 11.0], &[0.5, 10.0], 1.0).unwrap(), 10.0);
        assert!(mape(&[5.0], &[0.5], 1.0).is_err());
        assert!(mae(&[1.0], &[1.0, 2.0]).is_err());
    }

    proptest! {
        #[test]
        fn mae_never_exceeds_rmse(v in proptest::collection::vec((-100.0f64..100.0, 1.0f64..100.0), 1..40)) {
            let (p, t): (Vec<f64>, Vec<f64>) = v.into_iter().unzip();
            prop_assert!(mae(&p, &t).unwrap() <= rmse(&p, &t).unwrap() + 1e-12);
        }

        #[test]
        fn mape_scale_invariant(v in proptest::collection::vec((1.0f64..100.0, 1.0f64..100.0), 1..40), c in 1.0f64..20.0) {
            let (p, t): (Vec<f64>, Vec<f64>) = v.into_iter().unzip();
            let ps: Vec<f64> = p.iter().map(|x| x * c).collect();
            let ts: Vec<f64> = t.iter().map(|x| x * c).collect();
            let a = mape(&p, &t, 0.5).unwrap();
            let b = mape(&ps, &ts, 0.5).unwrap();
            prop_assert!((a - b).abs() <= 1e-9 * a.max(1.0));
        }

        #[test]
        fn metrics_permutation_invariant(v in proptest::collection::vec((1.0f64..100.0, 1.0f64..100.0), 2..30), rot in 0usize..30) {
            let (p, t): (Vec<f64>, Vec<f64>) = v.into_iter().unzip();
            let k = rot % p.len();
            let (mut pr, mut tr) = (p.clone(), t.clone());
            pr.rotate_left(k);
            tr.rotate_left(k);
            prop_assert!((mae(&p, &t).unwrap() - mae(&pr, &tr).unwrap()).abs() < 1e-9);
            prop_assert!((rmse(&p, &t).unwrap() - rmse(&pr, &tr).unwrap()).abs() < 1e-9);
            prop_assert!((mape(&p, &t, 1.0).unwrap() - mape(&pr, &tr, 1.0).unwrap()).abs() < 1e-9);
        }
    }
}
