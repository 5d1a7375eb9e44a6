//! Leave-one-couple-out cross-validation over codes, cohorts, and regimes.

use std::collections::{BTreeSet, HashMap};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::arch::{partition_features, PartitionMode, SubnetAssignment};
use crate::corpus::{make_folds, select_extremes, Fold, Gender, SessionRecord};
use crate::error::{Error, Result};
use crate::features::{FeatureLayout, FrameFeature};
use crate::nn::Network;
use crate::session::{aggregate_session, classify, fit_threshold};
use crate::trainer::{
    derive_seed, train_dense, train_dense_sdinit, train_sd, train_sj, train_subnets, Regime,
    TrainConfig, TrainSet,
};

/// Feature-space split configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SplitConfig {
    pub mode: PartitionMode,
    /// Group count for the random mode; the knowledge mode always yields 5.
    pub num_groups: usize,
}

impl Default for SplitConfig {
    fn default() -> Self {
        SplitConfig {
            mode: PartitionMode::Knowledge,
            num_groups: 5,
        }
    }
}

/// Whether models are trained per gender or on the pooled cohort.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GenderMode {
    PerGender,
    Pooled,
}

/// Full experiment configuration for one cross-validation run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub train: TrainConfig,
    pub split: SplitConfig,
    /// Fraction of the rated pool selected at each extreme.
    pub extreme_fraction: f64,
    /// Explicit per-class session count; overrides the fraction when set.
    pub per_class: Option<usize>,
    pub gender_mode: GenderMode,
    /// Clamp applied to frame scores before the session-aggregate logarithm.
    pub clamp_eps: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            train: TrainConfig::default(),
            split: SplitConfig::default(),
            extreme_fraction: 0.2,
            per_class: None,
            gender_mode: GenderMode::PerGender,
            clamp_eps: 1e-6,
        }
    }
}

/// One session-level test decision.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Decision {
    pub session_id: String,
    pub aggregate: f64,
    pub predicted: u8,
    pub label: u8,
}

/// A named training-loss curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedCurve {
    pub name: String,
    pub losses: Vec<f64>,
}

/// Per-fold outcome of one regime (or one standalone subnet).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegimeFold {
    pub fold_index: usize,
    pub threshold: f64,
    pub training_error: f64,
    pub decisions: Vec<Decision>,
    pub loss_curves: Vec<NamedCurve>,
    /// Epochs executed across every training stage this regime depends on.
    pub epochs_run: usize,
}

/// Pooled result of one regime over all folds of a cohort.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegimeResult {
    pub regime: Regime,
    /// Pooled accuracy over every evaluated test session; absent when no
    /// session could be evaluated. For the subnet regime this is the mean of
    /// the per-group accuracies.
    pub accuracy: Option<f64>,
    pub sessions_evaluated: usize,
    pub folds: Vec<RegimeFold>,
    /// Per-group standalone results (subnet regime only).
    pub subnets: Option<Vec<SubnetResult>>,
    /// Wall-clock seconds spent training for this regime, shared stages
    /// included. Kept out of the report file so reruns are byte-identical.
    #[serde(skip)]
    pub wall_clock_secs: f64,
}

/// Standalone evaluation of one per-group subnet.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubnetResult {
    pub group: String,
    pub accuracy: Option<f64>,
    pub sessions_evaluated: usize,
    pub folds: Vec<RegimeFold>,
}

/// Sizes and status of one fold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldInfo {
    pub fold_index: usize,
    pub held_out_couple_id: String,
    pub num_train_sessions: usize,
    pub num_test_sessions: usize,
    /// Reason this fold was skipped, when it was.
    pub skipped: Option<String>,
}

/// All results for one (code, cohort) pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CohortResult {
    /// "f", "m", or "pooled".
    pub cohort: String,
    pub sessions_selected: usize,
    pub per_class: usize,
    pub degenerate_selection: bool,
    pub folds: Vec<FoldInfo>,
    pub regimes: Vec<RegimeResult>,
}

/// All cohort results for one behavior code.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CodeResult {
    pub code: String,
    pub cohorts: Vec<CohortResult>,
}

/// The full cross-validation report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvReport {
    pub version: u32,
    pub seed: u64,
    pub config: RunConfig,
    pub regimes: Vec<Regime>,
    pub results: Vec<CodeResult>,
    #[serde(skip)]
    pub wall_clock_secs: f64,
}

/// Internal per-fold evaluation product.
struct FoldEval {
    info: FoldInfo,
    /// Parallel to the requested regime list; `None` when the fold was skipped
    /// or the regime is `Subnet` (whose details live in `subnet_folds`).
    per_regime: Vec<Option<RegimeFold>>,
    /// Parallel to the assignment groups when the subnet regime was requested.
    subnet_folds: Option<Vec<RegimeFold>>,
    /// Training seconds per requested regime, shared stages included.
    regime_secs: Vec<f64>,
}

/// Runs the full experiment matrix: per code and cohort, select extreme
/// sessions, plan leave-one-couple-out folds, train every requested regime per
/// fold, fit thresholds on training sessions only, and pool test decisions.
pub fn run_cv(
    frames: &[FrameFeature],
    sessions: &[SessionRecord],
    layout: &FeatureLayout,
    codes: &[String],
    regimes: &[Regime],
    cfg: &RunConfig,
) -> Result<CvReport> {
    let started = Instant::now();
    cfg.train.validate()?;
    if frames.is_empty() {
        return Err(Error::config("no frames to train on"));
    }
    if codes.is_empty() || regimes.is_empty() {
        return Err(Error::config("need at least one code and one regime"));
    }
    let frame_dim = frames[0].values.len();
    if frame_dim != layout.frame_dim() {
        return Err(Error::config(format!(
            "frames have {frame_dim} columns but the layout describes {}",
            layout.frame_dim()
        )));
    }

    let available: BTreeSet<&str> = sessions
        .iter()
        .flat_map(|s| s.ratings.keys().map(String::as_str))
        .collect();
    for code in codes {
        if !available.contains(code.as_str()) {
            let list: Vec<&str> = available.iter().copied().collect();
            return Err(Error::config(format!(
                "unknown behavior code '{code}'; available: {}",
                list.join(", ")
            )));
        }
    }

    let needs_subnets = regimes
        .iter()
        .any(|r| matches!(r, Regime::Subnet | Regime::Sd | Regime::Sj | Regime::SdInit));
    let assignment = if needs_subnets {
        Some(partition_features(
            cfg.split.mode,
            layout,
            cfg.split.num_groups,
            derive_seed(cfg.train.seed, &[7]),
        )?)
    } else {
        None
    };

    let mut frames_by_session: HashMap<&str, Vec<usize>> = HashMap::new();
    for (i, frame) in frames.iter().enumerate() {
        frames_by_session
            .entry(frame.session_id.as_str())
            .or_default()
            .push(i);
    }

    let mut results = Vec::with_capacity(codes.len());
    for (code_idx, code) in codes.iter().enumerate() {
        let cohorts: Vec<(String, Vec<&SessionRecord>)> = match cfg.gender_mode {
            GenderMode::Pooled => vec![("pooled".to_string(), sessions.iter().collect())],
            GenderMode::PerGender => [Gender::F, Gender::M]
                .iter()
                .map(|g| {
                    let pool: Vec<&SessionRecord> =
                        sessions.iter().filter(|s| s.gender == *g).collect();
                    (g.to_string(), pool)
                })
                .filter(|(_, pool)| !pool.is_empty())
                .collect(),
        };

        let mut cohort_results = Vec::new();
        for (cohort_idx, (cohort, pool)) in cohorts.iter().enumerate() {
            let rated: Vec<SessionRecord> = pool
                .iter()
                .filter(|s| s.ratings.contains_key(code))
                .map(|s| (*s).clone())
                .collect();
            let per_class = match cfg.per_class {
                Some(n) => n,
                None => (rated.len() as f64 * cfg.extreme_fraction).floor() as usize,
            };
            if per_class == 0 {
                return Err(Error::config(format!(
                    "cohort '{cohort}' has too few sessions rated for '{code}' \
                     to select extremes"
                )));
            }
            let selection = select_extremes(&rated, code, per_class)?;
            if selection.degenerate {
                log::warn!("code '{code}', cohort '{cohort}': extreme classes overlap in rating");
            }
            let plan = make_folds(&selection.sessions)?;
            plan.audit_no_leakage(&selection.sessions)?;

            let evals: Vec<FoldEval> = plan
                .folds
                .par_iter()
                .enumerate()
                .map(|(fold_idx, fold)| {
                    run_fold(
                        fold,
                        fold_idx,
                        &selection.sessions,
                        frames,
                        &frames_by_session,
                        assignment.as_ref(),
                        regimes,
                        cfg,
                        derive_seed(
                            cfg.train.seed,
                            &[100, code_idx as u64, cohort_idx as u64, fold_idx as u64],
                        ),
                    )
                })
                .collect::<Result<Vec<_>>>()?;

            cohort_results.push(assemble_cohort(
                cohort,
                &selection.sessions,
                per_class,
                selection.degenerate,
                regimes,
                assignment.as_ref(),
                evals,
            )?);
        }
        results.push(CodeResult {
            code: code.clone(),
            cohorts: cohort_results,
        });
    }

    Ok(CvReport {
        version: 1,
        seed: cfg.train.seed,
        config: cfg.clone(),
        regimes: regimes.to_vec(),
        results,
        wall_clock_secs: started.elapsed().as_secs_f64(),
    })
}

/// Scores each listed session with `net`: one score per frame, aggregated into
/// the session confidence. Sessions without frames are skipped with a warning.
fn score_sessions(
    net: &Network,
    ids: &[String],
    labels: &HashMap<&str, u8>,
    frames: &[FrameFeature],
    frames_by_session: &HashMap<&str, Vec<usize>>,
    clamp_eps: f64,
) -> Result<Vec<(String, f64, u8)>> {
    let mut out = Vec::with_capacity(ids.len());
    for id in ids {
        let Some(idxs) = frames_by_session.get(id.as_str()) else {
            log::warn!("session {id} has no frames; excluded from evaluation");
            continue;
        };
        let mut scores = Vec::with_capacity(idxs.len());
        for &i in idxs {
            scores.push(net.score(&frames[i].values)?);
        }
        let aggregate = aggregate_session(&scores, clamp_eps)?;
        out.push((id.clone(), aggregate, labels[id.as_str()]));
    }
    Ok(out)
}

fn eval_fold_regime(
    net: &Network,
    fold: &Fold,
    fold_idx: usize,
    labels: &HashMap<&str, u8>,
    frames: &[FrameFeature],
    frames_by_session: &HashMap<&str, Vec<usize>>,
    clamp_eps: f64,
    loss_curves: Vec<NamedCurve>,
    epochs_run: usize,
) -> Result<RegimeFold> {
    let train_scores = score_sessions(
        net,
        &fold.train_session_ids,
        labels,
        frames,
        frames_by_session,
        clamp_eps,
    )?;
    let pairs: Vec<(f64, u8)> = train_scores.iter().map(|&(_, q, l)| (q, l)).collect();
    let model = fit_threshold(&pairs)?;

    let test_scores = score_sessions(
        net,
        &fold.test_session_ids,
        labels,
        frames,
        frames_by_session,
        clamp_eps,
    )?;
    let decisions = test_scores
        .into_iter()
        .map(|(session_id, aggregate, label)| Decision {
            session_id,
            predicted: classify(aggregate, &model),
            aggregate,
            label,
        })
        .collect();

    Ok(RegimeFold {
        fold_index: fold_idx,
        threshold: model.threshold,
        training_error: model.training_error,
        decisions,
        loss_curves,
        epochs_run,
    })
}

#[allow(clippy::too_many_arguments)]
fn run_fold(
    fold: &Fold,
    fold_idx: usize,
    selected: &[SessionRecord],
    frames: &[FrameFeature],
    frames_by_session: &HashMap<&str, Vec<usize>>,
    assignment: Option<&SubnetAssignment>,
    regimes: &[Regime],
    cfg: &RunConfig,
    fold_seed: u64,
) -> Result<FoldEval> {
    let labels: HashMap<&str, u8> = selected
        .iter()
        .map(|s| (s.session_id.as_str(), s.binary_label.expect("selected")))
        .collect();
    let train_ids: BTreeSet<&str> = fold.train_session_ids.iter().map(String::as_str).collect();
    let train_sessions: Vec<SessionRecord> = selected
        .iter()
        .filter(|s| train_ids.contains(s.session_id.as_str()))
        .cloned()
        .collect();

    let train_frames: Vec<FrameFeature> = fold
        .train_session_ids
        .iter()
        .filter_map(|id| frames_by_session.get(id.as_str()))
        .flatten()
        .map(|&i| frames[i].clone())
        .collect();
    let train_set = TrainSet::from_frames(&train_frames, &train_sessions)?;

    // Data-lineage audit: no training row may come from the held-out couple.
    if let Some(row) = train_set
        .rows
        .iter()
        .find(|r| r.couple_id == fold.held_out_couple_id)
    {
        return Err(Error::internal(format!(
            "training row of session {} leaks the held-out couple {}",
            row.session_id, fold.held_out_couple_id
        )));
    }

    let mut info = FoldInfo {
        fold_index: fold_idx,
        held_out_couple_id: fold.held_out_couple_id.clone(),
        num_train_sessions: fold.train_session_ids.len(),
        num_test_sessions: fold.test_session_ids.len(),
        skipped: None,
    };

    if train_set.is_empty() || !train_set.has_both_classes() {
        let reason = "training fold lacks frames for one of the classes".to_string();
        log::warn!(
            "fold {fold_idx} (couple {}): {reason}; skipping",
            fold.held_out_couple_id
        );
        info.skipped = Some(reason);
        return Ok(FoldEval {
            info,
            per_regime: vec![None; regimes.len()],
            subnet_folds: None,
            regime_secs: vec![0.0; regimes.len()],
        });
    }

    let fold_cfg = TrainConfig {
        seed: fold_seed,
        ..cfg.train.clone()
    };

    let needs_subnets = regimes
        .iter()
        .any(|r| matches!(r, Regime::Subnet | Regime::Sd | Regime::Sj | Regime::SdInit));
    let needs_sd = regimes
        .iter()
        .any(|r| matches!(r, Regime::Sd | Regime::Sj | Regime::SdInit));

    let mut subnet_models = Vec::new();
    let mut subnets_secs = 0.0;
    let mut subnet_epochs = 0usize;
    if needs_subnets {
        let assignment = assignment
            .ok_or_else(|| Error::internal("subnet regimes need a feature assignment"))?;
        let t = Instant::now();
        subnet_models = train_subnets(&train_set, assignment, &fold_cfg)?;
        subnets_secs = t.elapsed().as_secs_f64();
        subnet_epochs = subnet_models.iter().map(|m| m.fit.epochs_run).sum();
    }

    let mut sd_trained: Option<(Network, Vec<NamedCurve>, usize)> = None;
    let mut sd_secs = 0.0;
    if needs_sd {
        let nets: Vec<Network> = subnet_models.iter().map(|m| m.network.clone()).collect();
        let t = Instant::now();
        let (sd_net, sd_fit) = train_sd(&nets, &train_set, &fold_cfg)?;
        sd_secs = t.elapsed().as_secs_f64();
        let mut curves: Vec<NamedCurve> = subnet_models
            .iter()
            .map(|m| NamedCurve {
                name: format!("subnet:{}", m.group),
                losses: m.fit.loss_curve.clone(),
            })
            .collect();
        curves.push(NamedCurve {
            name: "fusion".to_string(),
            losses: sd_fit.loss_curve.clone(),
        });
        let total_epochs = subnet_epochs + sd_fit.epochs_run;
        sd_trained = Some((sd_net, curves, total_epochs));
    }

    let mut per_regime: Vec<Option<RegimeFold>> = Vec::with_capacity(regimes.len());
    let mut regime_secs = Vec::with_capacity(regimes.len());
    let mut subnet_folds = None;

    for regime in regimes {
        match regime {
            Regime::Dense => {
                let t = Instant::now();
                let (net, fit) = train_dense(&train_set, &fold_cfg)?;
                let secs = t.elapsed().as_secs_f64();
                let rf = eval_fold_regime(
                    &net,
                    fold,
                    fold_idx,
                    &labels,
                    frames,
                    frames_by_session,
                    cfg.clamp_eps,
                    vec![NamedCurve {
                        name: "dense".to_string(),
                        losses: fit.loss_curve.clone(),
                    }],
                    fit.epochs_run,
                )?;
                per_regime.push(Some(rf));
                regime_secs.push(secs);
            }
            Regime::Subnet => {
                let mut group_folds = Vec::with_capacity(subnet_models.len());
                for model in &subnet_models {
                    let rf = eval_fold_regime(
                        &model.network,
                        fold,
                        fold_idx,
                        &labels,
                        frames,
                        frames_by_session,
                        cfg.clamp_eps,
                        vec![NamedCurve {
                            name: format!("subnet:{}", model.group),
                            losses: model.fit.loss_curve.clone(),
                        }],
                        model.fit.epochs_run,
                    )?;
                    group_folds.push(rf);
                }
                subnet_folds = Some(group_folds);
                per_regime.push(None);
                regime_secs.push(subnets_secs);
            }
            Regime::Sd => {
                let (net, curves, epochs) = sd_trained
                    .as_ref()
                    .ok_or_else(|| Error::internal("composite missing for sd regime"))?;
                let rf = eval_fold_regime(
                    net,
                    fold,
                    fold_idx,
                    &labels,
                    frames,
                    frames_by_session,
                    cfg.clamp_eps,
                    curves.clone(),
                    *epochs,
                )?;
                per_regime.push(Some(rf));
                regime_secs.push(subnets_secs + sd_secs);
            }
            Regime::Sj => {
                let (sd_net, _, sd_epochs) = sd_trained
                    .as_ref()
                    .ok_or_else(|| Error::internal("composite missing for sj regime"))?;
                let t = Instant::now();
                let (net, fit) = train_sj(sd_net, &train_set, &fold_cfg)?;
                let secs = t.elapsed().as_secs_f64();
                let rf = eval_fold_regime(
                    &net,
                    fold,
                    fold_idx,
                    &labels,
                    frames,
                    frames_by_session,
                    cfg.clamp_eps,
                    vec![NamedCurve {
                        name: "sj".to_string(),
                        losses: fit.loss_curve.clone(),
                    }],
                    sd_epochs + fit.epochs_run,
                )?;
                per_regime.push(Some(rf));
                regime_secs.push(subnets_secs + sd_secs + secs);
            }
            Regime::SdInit => {
                let (sd_net, _, sd_epochs) = sd_trained
                    .as_ref()
                    .ok_or_else(|| Error::internal("composite missing for sd_init regime"))?;
                let t = Instant::now();
                let (net, fit) = train_dense_sdinit(sd_net, &train_set, &fold_cfg)?;
                let secs = t.elapsed().as_secs_f64();
                let rf = eval_fold_regime(
                    &net,
                    fold,
                    fold_idx,
                    &labels,
                    frames,
                    frames_by_session,
                    cfg.clamp_eps,
                    vec![NamedCurve {
                        name: "sd_init".to_string(),
                        losses: fit.loss_curve.clone(),
                    }],
                    sd_epochs + fit.epochs_run,
                )?;
                per_regime.push(Some(rf));
                regime_secs.push(subnets_secs + sd_secs + secs);
            }
        }
    }

    Ok(FoldEval {
        info,
        per_regime,
        subnet_folds,
        regime_secs,
    })
}

fn pooled_accuracy(folds: &[RegimeFold]) -> (Option<f64>, usize) {
    let mut correct = 0usize;
    let mut total = 0usize;
    for fold in folds {
        for d in &fold.decisions {
            total += 1;
            if d.predicted == d.label {
                correct += 1;
            }
        }
    }
    if total == 0 {
        (None, 0)
    } else {
        (Some(correct as f64 / total as f64), total)
    }
}

fn assemble_cohort(
    cohort: &str,
    selected: &[SessionRecord],
    per_class: usize,
    degenerate: bool,
    regimes: &[Regime],
    assignment: Option<&SubnetAssignment>,
    evals: Vec<FoldEval>,
) -> Result<CohortResult> {
    let folds_info: Vec<FoldInfo> = evals.iter().map(|e| e.info.clone()).collect();

    let mut regime_results = Vec::with_capacity(regimes.len());
    for (ri, regime) in regimes.iter().enumerate() {
        let wall: f64 = evals.iter().map(|e| e.regime_secs[ri]).sum();
        if *regime == Regime::Subnet {
            let assignment = assignment
                .ok_or_else(|| Error::internal("subnet regime without an assignment"))?;
            let mut subnet_results = Vec::with_capacity(assignment.groups().len());
            for (gi, group) in assignment.groups().iter().enumerate() {
                let folds: Vec<RegimeFold> = evals
                    .iter()
                    .filter_map(|e| e.subnet_folds.as_ref().and_then(|v| v.get(gi)).cloned())
                    .collect();
                let (accuracy, n) = pooled_accuracy(&folds);
                subnet_results.push(SubnetResult {
                    group: group.name.clone(),
                    accuracy,
                    sessions_evaluated: n,
                    folds,
                });
            }
            let accuracies: Vec<f64> =
                subnet_results.iter().filter_map(|s| s.accuracy).collect();
            let mean = if accuracies.is_empty() {
                None
            } else {
                Some(accuracies.iter().sum::<f64>() / accuracies.len() as f64)
            };
            let evaluated = subnet_results
                .first()
                .map(|s| s.sessions_evaluated)
                .unwrap_or(0);
            regime_results.push(RegimeResult {
                regime: *regime,
                accuracy: mean,
                sessions_evaluated: evaluated,
                folds: Vec::new(),
                subnets: Some(subnet_results),
                wall_clock_secs: wall,
            });
        } else {
            let folds: Vec<RegimeFold> = evals
                .iter()
                .filter_map(|e| e.per_regime[ri].clone())
                .collect();
            let (accuracy, n) = pooled_accuracy(&folds);
            regime_results.push(RegimeResult {
                regime: *regime,
                accuracy,
                sessions_evaluated: n,
                folds,
                subnets: None,
                wall_clock_secs: wall,
            });
        }
    }

    Ok(CohortResult {
        cohort: cohort.to_string(),
        sessions_selected: selected.len(),
        per_class,
        degenerate_selection: degenerate,
        folds: folds_info,
        regimes: regime_results,
    })
}

fn fmt_acc(acc: Option<f64>) -> String {
    match acc {
        Some(a) => format!("{:6.2}", a * 100.0),
        None => "     -".to_string(),
    }
}

/// Renders the report as text tables: one accuracy cell per code, cohort, and
/// regime, plus a per-group table when the subnet regime was run.
pub fn render_tables(report: &CvReport) -> String {
    let mut out = String::new();
    out.push_str("Classification accuracy (%)\n");
    out.push_str(&format!("{:<14} {:<8}", "code", "cohort"));
    for regime in &report.regimes {
        out.push_str(&format!(" {:>8}", regime.as_str()));
    }
    out.push('\n');
    for code in &report.results {
        for cohort in &code.cohorts {
            out.push_str(&format!("{:<14} {:<8}", code.code, cohort.cohort));
            for regime in &cohort.regimes {
                out.push_str(&format!(" {:>8}", fmt_acc(regime.accuracy)));
            }
            out.push('\n');
        }
    }

    if report.regimes.contains(&Regime::Subnet) {
        out.push('\n');
        out.push_str("Standalone subnet accuracy (%)\n");
        let mut header_done = false;
        for code in &report.results {
            for cohort in &code.cohorts {
                let Some(subnet_regime) = cohort
                    .regimes
                    .iter()
                    .find(|r| r.regime == Regime::Subnet)
                else {
                    continue;
                };
                let Some(subnets) = &subnet_regime.subnets else {
                    continue;
                };
                if !header_done {
                    out.push_str(&format!("{:<14} {:<8}", "code", "cohort"));
                    for s in subnets {
                        out.push_str(&format!(" {:>15}", s.group));
                    }
                    out.push('\n');
                    header_done = true;
                }
                out.push_str(&format!("{:<14} {:<8}", code.code, cohort.cohort));
                for s in subnets {
                    out.push_str(&format!(" {:>15}", fmt_acc(s.accuracy)));
                }
                out.push('\n');
            }
        }
    }
    out
}
