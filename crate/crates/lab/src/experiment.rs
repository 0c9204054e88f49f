//! Run, evaluate and inspect experiments on disk.

use std::path::{Path, PathBuf};

use bayrn_core::bayrn::{evaluate_on_target, resume_bayrn, run_nominal, run_udr, target_eval_seed, Evaluation, RunEvent};
use bayrn_core::domains::Moment;

use crate::config::ExperimentConfig;
use crate::error::{LabError, Result};
use crate::record::{recover_events, BaselineRecord, JsonlWriter, Method, PolicyFile, RecordObserver, CONFIG_FILE, POLICY_FILE, RUN_FILE};
use crate::runner::Parallel;

#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub dir: PathBuf,
    pub method: Method,
    /// Distribution parameters of the final policy (`None` for nominal).
    pub phi: Option<Vec<f64>>,
    pub j_sim: f64,
    pub j_hat: f64,
    /// BayRn loop iterations.
    pub iterations: Option<usize>,
    pub policy: PolicyFile,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct RunOptions {
    /// Continue from the records already in the output directory.
    pub resume: bool,
    /// No per-record progress on stderr.
    pub quiet: bool,
}

/// Runs `method` with `cfg` and writes the config snapshot, run record and
/// policy file to `cfg.out_dir`.
pub fn run(method: Method, cfg: &ExperimentConfig, opts: RunOptions) -> Result<RunSummary> {
    cfg.validate()?;
    let dir = cfg.out_dir.clone();
    std::fs::create_dir_all(&dir).map_err(|e| LabError::io(&dir, e))?;
    let snapshot = dir.join(CONFIG_FILE);
    let prior = if opts.resume && dir.join(RUN_FILE).exists() {
        if method != Method::Bayrn {
            return Err(LabError::config("", "only bayrn runs can be resumed"));
        }
        if ExperimentConfig::load(&snapshot)? != *cfg {
            return Err(LabError::config("", format!("config differs from the snapshot in {}", snapshot.display())));
        }
        recover_events(&dir.join(RUN_FILE))?
    } else {
        cfg.save(&snapshot)?;
        Vec::new()
    };

    let exp = cfg.experiment();
    let target = cfg.target_domain();
    let (phi, candidate, iterations) = match method {
        Method::Bayrn => {
            let mut observer = RecordObserver::open(&dir, prior.len())?;
            observer.quiet = opts.quiet;
            let out = resume_bayrn(&exp, &target, &cfg.bayrn, cfg.seed, &Parallel, &mut observer, &prior)?;
            let Some(RunEvent::Final { candidate, .. }) = out.events.last() else {
                unreachable!("a completed run ends with its final record")
            };
            (Some(out.phi_star.clone()), candidate.clone(), Some(out.iterations))
        }
        Method::Udr | Method::Nominal => {
            let outcome = if method == Method::Udr {
                run_udr(&exp, &target, &cfg.bayrn, cfg.seed, &Parallel)?
            } else {
                run_nominal(&exp, &target, &cfg.bayrn, cfg.seed, &Parallel)?
            };
            let record = BaselineRecord { method, outcome };
            JsonlWriter::create(&dir.join(RUN_FILE))?.write(&record)?;
            (record.outcome.phi, record.outcome.candidate, None)
        }
    };

    let policy = PolicyFile {
        kind: exp.task.policy_kind(),
        dim: candidate.theta.len(),
        theta: candidate.theta.clone(),
        eval_seed: target_eval_seed(cfg.seed),
        n_tau: cfg.bayrn.n_tau,
        gamma: cfg.bayrn.polopt.gamma,
        j_hat: candidate.j_hat,
    };
    policy.save(&dir.join(POLICY_FILE))?;
    Ok(RunSummary { dir, method, phi, j_sim: candidate.j_sim, j_hat: candidate.j_hat, iterations, policy })
}

/// Re-evaluates a saved policy on the target domain of its config, by
/// default the `config.toml` next to the policy file. With the logged
/// seed and `n_tau` this reproduces the logged Ĵ exactly.
pub fn eval(policy_path: &Path, config: Option<&Path>, n_tau: Option<usize>) -> Result<Evaluation> {
    let policy = PolicyFile::load(policy_path)?;
    let config_path = match config {
        Some(p) => p.to_path_buf(),
        None => policy_path.parent().unwrap_or(Path::new(".")).join(CONFIG_FILE),
    };
    let cfg = ExperimentConfig::load(&config_path)?;
    if policy.kind != cfg.task.policy_kind() || policy.dim != cfg.task.policy_dim() {
        return Err(LabError::config(
            "task.policy",
            format!(
                "policy file holds {} with {} parameters, config expects {} with {}",
                policy.kind.as_str(),
                policy.dim,
                cfg.task.policy_kind().as_str(),
                cfg.task.policy_dim()
            ),
        ));
    }
    let n = n_tau.unwrap_or(policy.n_tau);
    if n == 0 {
        return Err(LabError::config("n_tau", "must be at least 1"));
    }
    Ok(evaluate_on_target(&cfg.task, &policy.theta, &cfg.target_domain(), policy.gamma, n, policy.eval_seed)?)
}

/// How far one mean coordinate of φ* landed from the target value.
#[derive(Debug, Clone, PartialEq)]
pub struct Recovery {
    pub label: String,
    pub found: f64,
    pub truth: f64,
    /// |found − truth| as a fraction of the coordinate's box width.
    pub error: f64,
}

/// Compares the mean coordinates of `phi` with the target domain.
pub fn recovery(cfg: &ExperimentConfig, phi: &[f64]) -> Vec<Recovery> {
    let target = cfg.target_domain().params;
    cfg.domain
        .search_box
        .dims
        .iter()
        .zip(phi)
        .filter(|(d, _)| d.moment == Moment::Mean)
        .filter_map(|(d, &found)| {
            let truth = target.get(&d.param)?;
            let width = d.max - d.min;
            let error = if width > 0.0 { (found - truth).abs() / width } else { 0.0 };
            Some(Recovery { label: d.label(), found, truth, error })
        })
        .collect()
}
