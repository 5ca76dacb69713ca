//! Files emitted by an experiment run: `results.csv`, `derived.csv`,
//! `plot.gp` and `manifest.txt`.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{Context, Result};

use velab::analytic::AnalyticContext;
use velab::config::render_config;
use velab::harness::{loglog_slope, ExperimentConfig, GradStats, PointResult};
use velab::methods::Method;

pub const RESULTS_HEADER: &str = "method,N,delta,M,grad_mean,grad_stderr,grad_var,var_stderr,seed,status";
pub const DERIVED_HEADER: &str = "metric,method,N,value";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Experiment {
    GradientConvergence,
    VarianceSweep,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::GradientConvergence => "gradient-convergence",
            Experiment::VarianceSweep => "variance-sweep",
        }
    }
}

pub struct RunOutput {
    pub experiment: Experiment,
    pub config: ExperimentConfig,
    pub results: Vec<PointResult>,
    /// Continuous-limit gradient at the configured parameters, if defined.
    pub theoretical: Option<f64>,
}

impl RunOutput {
    pub fn new(experiment: Experiment, config: ExperimentConfig, results: Vec<PointResult>) -> Self {
        let theoretical = config
            .params(0)
            .and_then(|p| AnalyticContext::new(p, config.policy()))
            .map(|ctx| ctx.theoretical_gradient(config.s0))
            .ok();
        Self {
            experiment,
            config,
            results,
            theoretical,
        }
    }

    fn successes(&self) -> impl Iterator<Item = &GradStats> {
        self.results.iter().filter_map(|r| r.outcome.as_ref().ok())
    }

    fn stats(&self, method: Method, horizon: usize) -> Option<&GradStats> {
        self.successes().find(|s| s.method == method && s.horizon == horizon)
    }

    pub fn results_csv(&self) -> String {
        let mut out = String::from(RESULTS_HEADER);
        out.push('\n');
        for point in &self.results {
            match &point.outcome {
                Ok(s) => {
                    let status = if s.unstable { "unstable" } else { "ok" };
                    let _ = writeln!(
                        out,
                        "{},{},{},{},{},{},{},{},{},{}",
                        s.method, s.horizon, s.delta, s.samples, s.mean, s.stderr_mean, s.variance,
                        s.stderr_variance, s.seed, status
                    );
                }
                Err(err) => {
                    let reason = err.to_string().replace([',', '\n'], ";");
                    let delta = self.config.total_time / (point.horizon as f64 + 1.0);
                    let _ = writeln!(
                        out,
                        "{},{},{},{},,,,,{},error: {}",
                        point.method, point.horizon, delta, self.config.samples, self.config.seed, reason
                    );
                }
            }
        }
        out
    }

    pub fn derived_csv(&self) -> String {
        let mut out = String::from(DERIVED_HEADER);
        out.push('\n');
        if let Some(theory) = self.theoretical {
            let _ = writeln!(out, "theoretical_gradient,,,{theory}");
        }
        match self.experiment {
            Experiment::GradientConvergence => {
                if let Some(theory) = self.theoretical {
                    for s in self.successes() {
                        let _ = writeln!(out, "deviation,{},{},{}", s.method, s.horizon, s.mean - theory);
                        let _ = writeln!(
                            out,
                            "deviation_in_stderr,{},{},{}",
                            s.method,
                            s.horizon,
                            (s.mean - theory) / s.stderr_mean
                        );
                    }
                }
            }
            Experiment::VarianceSweep => self.variance_metrics(&mut out),
        }
        out
    }

    fn variance_metrics(&self, out: &mut String) {
        for method in [Method::Nb, Method::Vb] {
            let all: Vec<(f64, f64)> = self
                .config
                .n_grid
                .iter()
                .filter_map(|&n| self.stats(method, n).map(|s| (n as f64, s.variance)))
                .collect();
            // Fit the asymptotic regime when the grid reaches it.
            let large: Vec<(f64, f64)> = all.iter().copied().filter(|&(n, _)| n >= 30.0).collect();
            let points = if large.len() >= 2 { large } else { all };
            if let Ok(slope) = loglog_slope(&points) {
                let _ = writeln!(out, "variance_slope,{method},,{slope}");
            }
        }
        for &n in &self.config.n_grid {
            let Some(ve) = self.stats(Method::Ve, n) else { continue };
            let best_baseline = [Method::Vb, Method::Sb, Method::Ab]
                .into_iter()
                .filter_map(|m| self.stats(m, n).map(|s| s.variance))
                .fold(f64::INFINITY, f64::min);
            if best_baseline.is_finite() {
                let _ = writeln!(out, "ve_improvement,ve,{n},{}", best_baseline / ve.variance);
            }
            if let Some(theory) = self.theoretical {
                let _ = writeln!(out, "ve_relative_variance,ve,{n},{}", ve.variance / (theory * theory));
            }
        }
    }

    pub fn plot_script(&self) -> String {
        let mut out = String::from("# gnuplot script; run from this directory: gnuplot plot.gp\n");
        out.push_str("set datafile separator ','\nset key top right\nset xlabel 'N'\nset logscale x\n");
        match self.experiment {
            Experiment::GradientConvergence => {
                out.push_str("set terminal pngcairo size 900,600\nset output 'gradient_convergence.png'\n");
                out.push_str("set ylabel 'policy gradient'\n");
                let theory = self.theoretical.map(|t| t.to_string()).unwrap_or_else(|| "NaN".into());
                let _ = writeln!(out, "theory = {theory}");
                out.push_str("plot \\\n");
                for m in &self.config.methods {
                    let _ = writeln!(
                        out,
                        "  'results.csv' using 2:(strcol(1) eq '{m}' ? $5 : 1/0):6 skip 1 with yerrorlines title '{m}', \\"
                    );
                }
                out.push_str("  theory with lines dashtype 2 title 'continuous limit'\n");
            }
            Experiment::VarianceSweep => {
                out.push_str("set terminal pngcairo size 900,600\nset output 'variance_sweep.png'\n");
                out.push_str("set ylabel 'per-trajectory gradient variance'\nset logscale y\n");
                let series: Vec<String> = self
                    .config
                    .methods
                    .iter()
                    .map(|m| {
                        format!(
                            "  'results.csv' using 2:(strcol(1) eq '{m}' ? $7 : 1/0):8 skip 1 with yerrorlines title '{m}'"
                        )
                    })
                    .collect();
                if series.is_empty() {
                    out.push_str("# no methods selected\n");
                } else {
                    out.push_str("plot \\\n");
                    out.push_str(&series.join(", \\\n"));
                    out.push('\n');
                }
            }
        }
        out
    }

    pub fn manifest(&self, files: &[&str]) -> String {
        let timestamp = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        let mut out = String::new();
        let _ = writeln!(out, "# velab {} {}", env!("CARGO_PKG_VERSION"), self.experiment.name());
        let _ = writeln!(out, "# timestamp = {timestamp} (unix seconds)");
        let _ = writeln!(out, "# files = {}", files.join(","));
        out.push_str("# Resolved configuration; pass this file back with --config to reproduce the run.\n");
        out.push_str(&render_config(&self.config));
        out
    }

    /// Writes all files into `dir` and returns their names.
    pub fn write(&self, dir: &Path) -> Result<Vec<&'static str>> {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        let files = ["results.csv", "derived.csv", "plot.gp", "manifest.txt"];
        let contents = [
            self.results_csv(),
            self.derived_csv(),
            self.plot_script(),
            self.manifest(&files),
        ];
        for (name, body) in files.iter().zip(contents) {
            let path = dir.join(name);
            fs::write(&path, body).with_context(|| format!("writing {}", path.display()))?;
        }
        Ok(files.to_vec())
    }
}
