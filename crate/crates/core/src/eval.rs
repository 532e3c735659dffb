//! Train a recovery model on a band selection and score it on the
//! validation split; the M/β ablation and the method comparison are built
//! from repeated runs under one fixed seed.

use std::path::Path;
use std::time::Instant;

use itertools::Itertools;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::correlation::CorrelationMatrix;
use crate::error::{ensure, Error, Result};
use crate::hypercube::{Planes, SpectralCube, TrainVal};
use crate::metrics::{aggregate_report, MetricsReport};
use crate::oracle::band_input;
use crate::recovery::{cosine_lr, ModelKind, RecoveryModel};
use crate::relax_search::SearchConfig;
use crate::select::{select_bands, SelectionMethod, SelectionResult};

const SHUFFLE_STREAM: u64 = 0xe7a1_0bad;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRun {
    pub selection: SelectionResult,
    pub model_kind: ModelKind,
    pub config: SearchConfig,
    pub report: MetricsReport,
    /// Wall-clock time; kept out of files so reruns stay byte-identical.
    #[serde(skip)]
    pub runtime_seconds: f64,
}

/// A trained model together with its validation predictions.
#[derive(Debug, Clone)]
pub struct TrainedRecovery {
    pub run: EvalRun,
    pub model: RecoveryModel,
    pub predictions: Vec<SpectralCube>,
}

/// Minibatch SGD of MRAE with cosine-annealed learning rate.
pub fn train_recovery(
    inputs: &[Planes],
    targets: &[SpectralCube],
    kind: ModelKind,
    config: &SearchConfig,
) -> Result<RecoveryModel> {
    config.validate()?;
    ensure!(!inputs.is_empty() && inputs.len() == targets.len(), Shape, "inputs and targets differ in count");
    let dims = config.model_dims(inputs[0].channels(), targets[0].bands());
    let mut model = RecoveryModel::new(kind, dims, config.seed)?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed.wrapping_add(SHUFFLE_STREAM));
    for epoch in 0..config.epochs {
        let lr = cosine_lr(epoch, config.epochs, config.lr_w)?;
        let mut order: Vec<usize> = (0..inputs.len()).collect();
        order.shuffle(&mut rng);
        for batch in order.chunks(config.batch) {
            let mut grad = vec![0.0; model.param_count()];
            for &i in batch {
                let b = model.loss_and_gradients(&inputs[i], &targets[i])?;
                grad.iter_mut().zip(&b.grad_params).for_each(|(a, g)| *a += g);
            }
            let scale = 1.0 / batch.len() as f64;
            grad.iter_mut().for_each(|g| *g *= scale);
            model = model.sgd_step_raw(&grad, lr)?;
        }
    }
    Ok(model)
}

pub fn train_and_predict(
    data: &TrainVal,
    selection: &SelectionResult,
    kind: ModelKind,
    config: &SearchConfig,
) -> Result<TrainedRecovery> {
    let started = Instant::now();
    let n = data.bands();
    ensure!(
        !selection.indices.is_empty() && selection.indices.iter().all(|&i| i < n),
        Shape,
        "selection {:?} does not fit {n} bands",
        selection.indices
    );
    let inputs = |cubes: &[SpectralCube]| {
        cubes
            .iter()
            .map(|c| band_input(c, &selection.indices))
            .collect::<Result<Vec<_>>>()
    };
    let train_inputs = inputs(data.train.cubes())?;
    let model = train_recovery(&train_inputs, data.train.cubes(), kind, config)?;
    let predictions = data
        .val
        .cubes()
        .iter()
        .zip(inputs(data.val.cubes())?)
        .map(|(gt, x)| gt.with_planes(model.forward(&x)?))
        .collect::<Result<Vec<_>>>()?;
    let report = aggregate_report(&data.val, &predictions)?;
    Ok(TrainedRecovery {
        run: EvalRun {
            selection: selection.clone(),
            model_kind: kind,
            config: config.clone(),
            report,
            runtime_seconds: started.elapsed().as_secs_f64(),
        },
        model,
        predictions,
    })
}

pub fn train_and_evaluate(
    data: &TrainVal,
    selection: &SelectionResult,
    kind: ModelKind,
    config: &SearchConfig,
) -> Result<EvalRun> {
    Ok(train_and_predict(data, selection, kind, config)?.run)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationRow {
    pub m: usize,
    pub beta: f64,
    pub run: EvalRun,
}

/// One selection per `(M, β)` from the same learned priorities, each
/// evaluated with identical training settings.
pub fn ablation_m_beta(
    data: &TrainVal,
    priorities: &[f64],
    correlation: &CorrelationMatrix,
    ms: &[usize],
    betas: &[f64],
    kind: ModelKind,
    config: &SearchConfig,
) -> Result<Vec<AblationRow>> {
    ensure!(!ms.is_empty() && !betas.is_empty(), Invalid, "ablation needs at least one M and one beta");
    let grid: Vec<(usize, f64)> = betas.iter().flat_map(|&b| ms.iter().map(move |&m| (m, b))).collect();
    let selections = grid
        .iter()
        .map(|&(m, beta)| select_bands(priorities, correlation, m, beta, data.wavelengths_nm()))
        .collect::<Result<Vec<_>>>()?;
    grid.into_par_iter()
        .zip(selections)
        .map(|((m, beta), sel)| {
            Ok(AblationRow {
                m,
                beta,
                run: train_and_evaluate(data, &sel, kind, config)?,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub method: String,
    pub run: EvalRun,
}

/// Evaluates named selections that share one `M`; an all-bands entry is
/// exempt as the diagnostic upper bound.
pub fn compare_methods(
    data: &TrainVal,
    methods: &[(String, SelectionResult)],
    kind: ModelKind,
    config: &SearchConfig,
) -> Result<Vec<ComparisonRow>> {
    let proper = || methods.iter().filter(|(_, s)| s.method != SelectionMethod::AllBands);
    if let Some((_, first)) = proper().next() {
        ensure!(
            proper().all(|(_, s)| s.m == first.m),
            Invalid,
            "compared selections must share M, got {:?}",
            methods.iter().map(|(name, s)| format!("{name}={}", s.m)).collect::<Vec<_>>()
        );
    }
    methods
        .par_iter()
        .map(|(name, sel)| {
            Ok(ComparisonRow {
                method: name.clone(),
                run: train_and_evaluate(data, sel, kind, config)?,
            })
        })
        .collect()
}

fn wavelength_list(sel: &SelectionResult) -> String {
    sel.wavelengths_nm.iter().join(";")
}

/// `m,beta,indices,wavelengths,mrae,rmse,psnr`
pub fn write_ablation_csv(rows: &[AblationRow], path: impl AsRef<Path>) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["m", "beta", "indices", "wavelengths", "mrae", "rmse", "psnr"])?;
    for r in rows {
        let rep = &r.run.report;
        w.write_record([
            r.m.to_string(),
            r.beta.to_string(),
            r.run.selection.indices.iter().join(";"),
            wavelength_list(&r.run.selection),
            rep.mrae.to_string(),
            rep.rmse.to_string(),
            rep.psnr.to_string(),
        ])?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

/// `method,wavelengths,mrae,rmse,psnr`
pub fn write_comparison_csv(rows: &[ComparisonRow], path: impl AsRef<Path>) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["method", "wavelengths", "mrae", "rmse", "psnr"])?;
    for r in rows {
        let rep = &r.run.report;
        w.write_record([
            r.method.clone(),
            wavelength_list(&r.run.selection),
            rep.mrae.to_string(),
            rep.rmse.to_string(),
            rep.psnr.to_string(),
        ])?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

/// Every run of one `eval` invocation plus the settings that produced them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mode: String,
    pub model_kind: ModelKind,
    pub config: SearchConfig,
    pub runs: Vec<LabelledRun>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelledRun {
    pub label: String,
    pub run: EvalRun,
}

impl Summary {
    pub fn write_json(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let text = serde_json::to_string_pretty(self).map_err(|e| Error::json(path, e))?;
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hypercube::{split_train_val, synth_dataset, SynthConfig};
    use crate::select::{SelectionMethod, SelectionResult};

    fn data() -> TrainVal {
        let cfg = SynthConfig {
            bands: 6,
            latents: 3,
            height: 4,
            width: 4,
            seed: 2,
            ..Default::default()
        };
        split_train_val(&synth_dataset(&cfg, 6).unwrap(), 0.34, 2).unwrap()
    }

    fn quick() -> SearchConfig {
        SearchConfig {
            epochs: 5,
            lr_w: 0.05,
            model_kind: ModelKind::LinearPerPixel,
            ..Default::default()
        }
    }

    #[test]
    fn evaluation_is_deterministic() {
        let d = data();
        let sel = SelectionResult::new(SelectionMethod::Manual, vec![1, 4], d.wavelengths_nm(), None).unwrap();
        let a = train_and_evaluate(&d, &sel, ModelKind::LinearPerPixel, &quick()).unwrap();
        let b = train_and_evaluate(&d, &sel, ModelKind::LinearPerPixel, &quick()).unwrap();
        assert_eq!(a.report, b.report);
        assert_eq!(a.report.per_wavelength_psnr.len(), 6);
    }

    #[test]
    fn mismatched_selection_rejected() {
        let d = data();
        let sel = SelectionResult::new(SelectionMethod::Manual, vec![1, 7], &crate::hypercube::even_wavelengths(9), None)
            .unwrap();
        assert!(train_and_evaluate(&d, &sel, ModelKind::LinearPerPixel, &quick()).is_err());
    }

    #[test]
    fn comparison_requires_shared_m() {
        let d = data();
        let wl = d.wavelengths_nm();
        let a = SelectionResult::new(SelectionMethod::Manual, vec![0, 3], wl, None).unwrap();
        let b = SelectionResult::new(SelectionMethod::Nbs, vec![0, 3, 5], wl, None).unwrap();
        let methods = vec![("a".to_string(), a.clone()), ("b".to_string(), b)];
        assert!(compare_methods(&d, &methods, ModelKind::LinearPerPixel, &quick()).is_err());

        let same = vec![("x".to_string(), a.clone()), ("y".to_string(), a)];
        let rows = compare_methods(&d, &same, ModelKind::LinearPerPixel, &quick()).unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[0].run.report, rows[1].run.report);
    }

    #[test]
    fn single_pair_ablation_matches_direct_run() {
        let d = data();
        let p = [0.6, 0.55, 0.7, 0.2, 0.4, 0.65];
        let c = CorrelationMatrix::identity(6);
        let rows = ablation_m_beta(&d, &p, &c, &[3], &[0.5], ModelKind::LinearPerPixel, &quick()).unwrap();
        assert_eq!(rows.len(), 1);
        let sel = select_bands(&p, &c, 3, 0.5, d.wavelengths_nm()).unwrap();
        let direct = train_and_evaluate(&d, &sel, ModelKind::LinearPerPixel, &quick()).unwrap();
        assert_eq!(rows[0].run.report, direct.report);
        assert!(ablation_m_beta(&d, &p, &c, &[], &[0.5], ModelKind::LinearPerPixel, &quick()).is_err());
    }

    #[test]
    fn beta_sweep_keeps_m() {
        let d = data();
        let p = [0.6, 0.55, 0.7, 0.2, 0.4, 0.65];
        let c = crate::correlation::band_correlation(&d.train).unwrap();
        let rows =
            ablation_m_beta(&d, &p, &c, &[3], &[0.01, 0.5, 2.0], ModelKind::LinearPerPixel, &quick()).unwrap();
        assert_eq!(rows.len(), 3);
        assert!(rows.iter().all(|r| r.m == 3 && r.run.selection.m == 3));
        assert_eq!(rows.iter().map(|r| r.beta).collect::<Vec<_>>(), vec![0.01, 0.5, 2.0]);
    }
}
