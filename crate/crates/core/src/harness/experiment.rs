//! Config-driven experiment runner.

use std::fmt::Display;
use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{fit_slope, halving_level, kfold, level_profile, quantization_error, regression_eval, Fold};
use crate::config::{RunConfig, Task};
use crate::covdim::dimension_profiles;
use crate::dataset::PointSet;
use crate::error::{Error, Result};
use crate::linalg::dist_sq;
use crate::trees::PartitionTree;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileRow {
    pub rule: String,
    #[serde(rename = "D")]
    pub dim: usize,
    pub level: usize,
    pub max_diam_sq: f64,
    pub avg_diam_sq: f64,
    pub cells: usize,
    pub dist_splits: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRow {
    pub task: String,
    pub rule: String,
    pub level: usize,
    pub mean: f64,
    pub std: f64,
    pub folds: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlopeRow {
    pub rule: String,
    #[serde(rename = "D")]
    pub dim: usize,
    pub l0: usize,
    pub l1: usize,
    /// `None` when the window holds fewer than two nonzero levels.
    pub slope: Option<f64>,
    /// First level where `Δ_a` is at most half its root value.
    pub halving_level: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DimestRow {
    #[serde(rename = "D")]
    pub dim: usize,
    pub r: f64,
    pub d_mean: Option<f64>,
    pub d_std: Option<f64>,
    pub n_mean: f64,
    pub epsilon: f64,
}

/// Everything one run produces. Serializes to `report.json`; the CSV files
/// are flat views of the same rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub config: RunConfig,
    pub profiles: Vec<ProfileRow>,
    pub slopes: Vec<SlopeRow>,
    pub eval: Vec<EvalRow>,
    pub dimest: Vec<DimestRow>,
}

fn opt<T: Display>(v: Option<T>) -> String {
    v.map_or_else(|| "NaN".to_string(), |x| x.to_string())
}

fn write_file(dir: &Path, name: &str, body: impl FnOnce(&mut Vec<u8>) -> std::io::Result<()>) -> Result<()> {
    let path = dir.join(name);
    let mut buf = Vec::new();
    body(&mut buf).map_err(|e| Error::io(&path, e))?;
    std::fs::write(&path, buf).map_err(|e| Error::io(&path, e))
}

impl ExperimentReport {
    pub fn write_profile_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "rule,D,level,max_diam_sq,avg_diam_sq,cells,dist_splits")?;
        for r in &self.profiles {
            writeln!(
                w,
                "{},{},{},{},{},{},{}",
                r.rule, r.dim, r.level, r.max_diam_sq, r.avg_diam_sq, r.cells, r.dist_splits
            )?;
        }
        Ok(())
    }

    pub fn write_eval_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "task,rule,level,mean,std,folds")?;
        for r in &self.eval {
            writeln!(w, "{},{},{},{},{},{}", r.task, r.rule, r.level, r.mean, r.std, r.folds)?;
        }
        Ok(())
    }

    pub fn write_slopes_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "rule,D,l0,l1,slope,halving_level")?;
        for r in &self.slopes {
            writeln!(w, "{},{},{},{},{},{}", r.rule, r.dim, r.l0, r.l1, opt(r.slope), opt(r.halving_level))?;
        }
        Ok(())
    }

    pub fn write_dimest_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "D,r,d_mean,d_std,n_mean,epsilon")?;
        for r in &self.dimest {
            writeln!(w, "{},{},{},{},{},{}", r.dim, r.r, opt(r.d_mean), opt(r.d_std), r.n_mean, r.epsilon)?;
        }
        Ok(())
    }

    /// Writes `report.json` plus one CSV per task family that ran.
    pub fn write_to(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let cfg = &self.config;
        if cfg.has_task(Task::Profile) {
            write_file(dir, "profile.csv", |w| self.write_profile_csv(w))?;
            if cfg.slope_window.is_some() {
                write_file(dir, "slopes.csv", |w| self.write_slopes_csv(w))?;
            }
        }
        if cfg.tasks.iter().any(|t| t.uses_folds()) {
            write_file(dir, "eval.csv", |w| self.write_eval_csv(w))?;
        }
        if cfg.has_task(Task::Dimest) {
            write_file(dir, "dimest.csv", |w| self.write_dimest_csv(w))?;
        }
        write_file(dir, "report.json", |w| {
            serde_json::to_writer_pretty(&mut *w, self)?;
            w.write_all(b"\n")
        })
    }
}

/// Runs every task of `config`. Work units run on the current rayon pool and
/// are merged in configuration order, so results do not depend on the
/// number of threads.
pub fn run_experiment(config: &RunConfig) -> Result<ExperimentReport> {
    config.validate()?;
    let datasets = config.dataset.load(config.seed)?;
    let mut report = ExperimentReport {
        config: config.clone(),
        profiles: Vec::new(),
        slopes: Vec::new(),
        eval: Vec::new(),
        dimest: Vec::new(),
    };

    if config.has_task(Task::Dimest) {
        for data in &datasets {
            for p in dimension_profiles(data, &config.covdim, config.seed)? {
                report.dimest.extend(p.records.iter().map(|r| DimestRow {
                    dim: data.dim(),
                    r: r.r,
                    d_mean: r.d_mean,
                    d_std: r.d_std,
                    n_mean: r.n_mean,
                    epsilon: p.epsilon,
                }));
            }
        }
    }

    if config.has_task(Task::Profile) {
        let units: Vec<(usize, usize)> = (0..datasets.len())
            .flat_map(|d| (0..config.trees.len()).map(move |t| (d, t)))
            .collect();
        let results: Vec<Result<(Vec<ProfileRow>, Option<SlopeRow>)>> = units
            .par_iter()
            .map(|&(d, t)| profile_unit(config, &datasets[d], t))
            .collect();
        for r in results {
            let (rows, slope) = r?;
            report.profiles.extend(rows);
            report.slopes.extend(slope);
        }
    }

    if config.tasks.iter().any(|t| t.uses_folds()) {
        let data = &datasets[0];
        if config.has_task(Task::Regress) && data.responses().is_none() {
            return Err(Error::Config {
                path: "tasks".into(),
                message: "regress needs a data set with responses".into(),
            });
        }
        let folds = kfold(data.len(), config.folds, config.seed)?;
        let units: Vec<(usize, usize)> = (0..config.trees.len())
            .flat_map(|t| (0..folds.len()).map(move |f| (t, f)))
            .collect();
        let results: Vec<Result<FoldScores>> = units
            .par_iter()
            .map(|&(t, f)| eval_unit(config, data, t, &folds[f]))
            .collect();
        let results: Vec<FoldScores> = results.into_iter().collect::<Result<_>>()?;
        for (t, spec) in config.trees.iter().enumerate() {
            let per_fold = &results[t * folds.len()..(t + 1) * folds.len()];
            report.eval.extend(aggregate(&spec.rule, per_fold));
        }
    }
    Ok(report)
}

fn profile_unit(config: &RunConfig, data: &PointSet, t: usize) -> Result<(Vec<ProfileRow>, Option<SlopeRow>)> {
    let spec = &config.trees[t];
    let tree = PartitionTree::build(data, &spec.build_config(config.seed)?)?;
    let profile = level_profile(&tree);
    let rows = profile
        .levels
        .iter()
        .map(|s| ProfileRow {
            rule: spec.rule.clone(),
            dim: data.dim(),
            level: s.level,
            max_diam_sq: s.max_diam_sq,
            avg_diam_sq: s.avg_diam_sq,
            cells: s.cells,
            dist_splits: s.dist_splits,
        })
        .collect();
    let slope = config.slope_window.map(|[l0, l1]| SlopeRow {
        rule: spec.rule.clone(),
        dim: data.dim(),
        l0,
        l1,
        slope: fit_slope(&profile, l0, l1).ok(),
        halving_level: halving_level(&profile),
    });
    Ok((rows, slope))
}

/// Per task name, one score per level.
type FoldScores = Vec<(&'static str, Vec<f64>)>;

fn eval_unit(config: &RunConfig, data: &PointSet, t: usize, fold: &Fold) -> Result<FoldScores> {
    let train = data.subset(&fold.train)?;
    let test = data.subset(&fold.test)?;
    let tree = PartitionTree::build(&train, &config.trees[t].build_config(config.seed)?)?;
    let top = config.max_level.unwrap_or(tree.height());
    let levels = 0..=top;
    let mut out: FoldScores = Vec::new();
    if config.has_task(Task::Quantize) {
        let scores = levels.clone().map(|l| quantization_error(&tree, &test, l)).collect::<Result<_>>()?;
        out.push(("quantize", scores));
    }
    if config.has_task(Task::Nn) {
        let (pct, ratio) = nn_scores(&tree, &test, top);
        out.push(("nn_percentile", pct));
        out.push(("nn_ratio", ratio));
    }
    if config.has_task(Task::Regress) {
        let scores = levels.map(|l| regression_eval(&tree, &test, l)).collect::<Result<_>>()?;
        out.push(("regress", scores));
    }
    Ok(out)
}

/// Mean percentile and mean distance ratio per level, sharing one exhaustive
/// distance scan per query across levels.
fn nn_scores(tree: &PartitionTree<'_>, test: &PointSet, top: usize) -> (Vec<f64>, Vec<f64>) {
    let train = tree.points();
    let n = train.len() as f64;
    let mut pct = vec![0.0; top + 1];
    let mut ratio = vec![0.0; top + 1];
    for q in test.iter() {
        let dists: Vec<f64> = train.iter().map(|p| dist_sq(p, q)).collect();
        let mut sorted = dists.clone();
        sorted.sort_by(f64::total_cmp);
        let nearest = sorted[0];
        for level in 0..=top {
            let cell = &tree.node(tree.route(q, level)).members;
            let best = cell.iter().map(|&i| dists[i]).fold(f64::INFINITY, f64::min);
            let closer = sorted.partition_point(|&d| d < best);
            pct[level] += (1 + closer) as f64 / n;
            ratio[level] += if nearest == 0.0 {
                1.0
            } else {
                (best / nearest).sqrt()
            };
        }
    }
    let m = test.len() as f64;
    pct.iter_mut().chain(ratio.iter_mut()).for_each(|v| *v /= m);
    (pct, ratio)
}

/// Mean and population standard deviation across folds. Folds whose tree is
/// shallower than the deepest one repeat their leaf-level score.
fn aggregate(rule: &str, per_fold: &[FoldScores]) -> Vec<EvalRow> {
    let mut rows = Vec::new();
    let k = per_fold.len();
    for (ti, (task, _)) in per_fold[0].iter().enumerate() {
        let depth = per_fold.iter().map(|f| f[ti].1.len()).max().unwrap_or(0);
        for level in 0..depth {
            let vals: Vec<f64> = per_fold
                .iter()
                .map(|f| {
                    let s = &f[ti].1;
                    s[level.min(s.len() - 1)]
                })
                .collect();
            let mean = vals.iter().sum::<f64>() / k as f64;
            let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / k as f64;
            rows.push(EvalRow {
                task: task.to_string(),
                rule: rule.to_string(),
                level,
                mean,
                std: var.sqrt(),
                folds: k,
            });
        }
    }
    rows
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(tasks: &str, extra: &str) -> RunConfig {
        RunConfig::from_json(&format!(
            r#"{{"version": 1,
                "dataset": {{"generator": "sinusoid", "n": 300, "dims": [10]}},
                "trees": [{{"rule": "kd", "min_size": 5}}, {{"rule": "pd", "min_size": 5}}],
                "tasks": {tasks}, "folds": 5, "seed": 2 {extra}}}"#
        ))
        .unwrap()
    }

    #[test]
    fn profile_only_run() {
        let r = run_experiment(&config(r#"["profile"]"#, r#", "slope_window": [1, 4]"#)).unwrap();
        assert!(r.eval.is_empty() && r.dimest.is_empty());
        assert_eq!(r.slopes.len(), 2);
        let root: Vec<&ProfileRow> = r.profiles.iter().filter(|p| p.level == 0).collect();
        assert_eq!(root.len(), 2);
        assert_eq!(root[0].avg_diam_sq, root[1].avg_diam_sq);
        assert_eq!(root[0].cells, 1);
    }

    #[test]
    fn eval_run_covers_every_task_and_level() {
        let r = run_experiment(&config(r#"["quantize", "nn", "regress"]"#, r#", "max_level": 4"#)).unwrap();
        for task in ["quantize", "nn_percentile", "nn_ratio", "regress"] {
            for rule in ["kd", "pd"] {
                let levels: Vec<usize> = r.eval.iter().filter(|e| e.task == task && e.rule == rule).map(|e| e.level).collect();
                assert_eq!(levels, vec![0, 1, 2, 3, 4], "{task} {rule}");
            }
        }
        let at0: Vec<&EvalRow> = r.eval.iter().filter(|e| e.task.starts_with("nn") && e.level == 0).collect();
        for e in at0 {
            assert!(e.mean > 0.0 && e.mean <= 1.0 + 1e-12, "{e:?}");
            assert_eq!(e.folds, 5);
        }
    }

    #[test]
    fn runs_are_reproducible() {
        let cfg = config(r#"["profile", "nn"]"#, r#", "max_level": 3"#);
        let a = run_experiment(&cfg).unwrap();
        let b = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap()
            .install(|| run_experiment(&cfg).unwrap());
        assert_eq!(a, b);
    }

    #[test]
    fn regress_needs_responses() {
        let cfg = RunConfig::from_json(
            r#"{"version": 1, "dataset": {"generator": "affine", "n": 50, "dim": 4, "d": 2},
                "trees": [{"rule": "kd"}], "tasks": ["regress"], "folds": 5, "seed": 0}"#,
        )
        .unwrap();
        assert!(matches!(run_experiment(&cfg), Err(Error::Config { .. })));
    }
}
