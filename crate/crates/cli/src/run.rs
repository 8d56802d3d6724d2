//! Experiment pipelines: dispatch a parsed config to the core modules and
//! emit CSV artifacts plus a reproducibility manifest.
//!
//! Costs are reported in nats; per-unit quantities are per unit ℓ¹ distance.
//! All Monte Carlo reductions in the core are ordered by replica index, so a
//! given (config, seed) produces byte-identical CSVs at any worker count.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rwpot_core::annealed::{beta_upper_sequence, BetaEstimator};
use rwpot_core::compare::{
    choose_rm, coupled_gap_experiment, criterion_d1, crossing_statistics, white_box_prob,
    witness_for, GapMode,
};
use rwpot_core::dist::DistributionSpec;
use rwpot_core::error::Error as CoreError;
use rwpot_core::field::{realize_seeded, LatticeBox};
use rwpot_core::perc::mu_estimate;
use rwpot_core::rates::{
    default_lambda_grid, km_speed, lambda_max_annealed, lambda_max_quenched, lambda_star,
    ldp_dp_check, lyapunov_curve, rate_function, CurveConfig, CurveMode, LdpInstance, RateValue,
};
use rwpot_core::rng::{seed_stream, SplitMix64};
use rwpot_core::walk::{norm1, sample_walk_until};
use rwpot_core::{fmt_f64, Error};

use crate::config::{Config, ConfigError};

/// Failures mapped onto process exit codes.
#[derive(Debug)]
pub enum RunError {
    /// Exit 2.
    Config(ConfigError),
    /// Exit 1.
    Invariant(String),
    /// Exit 3.
    Resource(String),
}

impl std::fmt::Display for RunError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RunError::Config(e) => write!(f, "{e}"),
            RunError::Invariant(m) => write!(f, "invariant failure: {m}"),
            RunError::Resource(m) => write!(f, "resource limit: {m}"),
        }
    }
}

impl From<ConfigError> for RunError {
    fn from(e: ConfigError) -> Self {
        RunError::Config(e)
    }
}

impl From<CoreError> for RunError {
    fn from(e: CoreError) -> Self {
        match e {
            Error::Resource(m) => RunError::Resource(m),
            other => RunError::Invariant(other.to_string()),
        }
    }
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => 2,
            RunError::Invariant(_) => 1,
            RunError::Resource(_) => 3,
        }
    }
}

pub struct RunOutput {
    pub summary: Vec<String>,
}

struct Artifacts {
    out_dir: PathBuf,
    files: Vec<(String, String)>,
    warnings: Vec<String>,
    replicas: Vec<(String, u64)>,
}

impl Artifacts {
    fn new(out_dir: &Path) -> Self {
        Artifacts {
            out_dir: out_dir.to_path_buf(),
            files: Vec::new(),
            warnings: Vec::new(),
            replicas: Vec::new(),
        }
    }

    fn push_csv(&mut self, name: &str, content: String) {
        self.files.push((name.to_string(), content));
    }

    fn warn(&mut self, w: impl Into<String>) {
        self.warnings.push(w.into());
    }

    fn replicas(&mut self, label: &str, n: u64) {
        self.replicas.push((label.to_string(), n));
    }

    fn finish(
        mut self,
        kind: &str,
        config: &Config,
        seed: u64,
        threads: usize,
        started: Instant,
    ) -> Result<RunOutput, RunError> {
        let mut manifest = String::new();
        let _ = writeln!(
            manifest,
            "# rerunnable manifest: `rwpot {kind} --config <this file>`"
        );
        let _ = writeln!(manifest, "kind = {kind}");
        for (k, v) in config.keys() {
            if k == "kind" || k == "seed" {
                continue;
            }
            let _ = writeln!(manifest, "{k} = {v}");
        }
        let _ = writeln!(manifest, "seed = {seed}");
        let _ = writeln!(
            manifest,
            "meta.code_version = {}",
            env!("CARGO_PKG_VERSION")
        );
        let _ = writeln!(manifest, "meta.threads = {threads}");
        let _ = writeln!(
            manifest,
            "meta.wall_clock_ms = {}",
            started.elapsed().as_millis()
        );
        let _ = writeln!(manifest, "meta.tolerance.solver_residual = 1e-10");
        let _ = writeln!(manifest, "meta.tolerance.pseudo_inverse_bisect = 1e-12");
        let _ = writeln!(manifest, "meta.tolerance.laplace_quadrature_rel = 1e-10");
        let _ = writeln!(manifest, "meta.tolerance.comparison_grid_points = 10000");
        for (label, n) in &self.replicas {
            let _ = writeln!(manifest, "meta.replicas.{label} = {n}");
        }
        for (i, w) in self.warnings.iter().enumerate() {
            let _ = writeln!(manifest, "meta.warning.{i} = {w}");
        }
        for (name, _) in &self.files {
            let _ = writeln!(manifest, "meta.artifact = {name}");
        }
        self.files.push(("manifest.txt".to_string(), manifest));

        std::fs::create_dir_all(&self.out_dir)
            .map_err(|e| RunError::Invariant(format!("cannot create output dir: {e}")))?;
        let mut artifacts = Vec::new();
        for (name, content) in &self.files {
            let path = self.out_dir.join(name);
            std::fs::write(&path, content)
                .map_err(|e| RunError::Invariant(format!("cannot write {name}: {e}")))?;
            artifacts.push(path);
        }
        let mut summary: Vec<String> = artifacts
            .iter()
            .map(|p| format!("wrote {}", p.display()))
            .collect();
        summary.extend(self.warnings.iter().map(|w| format!("warning: {w}")));
        Ok(RunOutput { summary })
    }
}

fn join_i64(v: &[i64]) -> String {
    v.iter()
        .map(|c| c.to_string())
        .collect::<Vec<_>>()
        .join(";")
}

fn curve_mode(config: &Config) -> Result<CurveMode, RunError> {
    match config.str_opt("mode").unwrap_or("annealed") {
        "quenched" => Ok(CurveMode::Quenched),
        "annealed" => Ok(CurveMode::Annealed),
        other => Err(RunError::Config(ConfigError {
            line: None,
            message: format!("mode must be quenched|annealed, got `{other}`"),
        })),
    }
}

/// Dispatch one experiment.
pub fn run(
    kind: &str,
    config: &Config,
    out_dir: &Path,
    seed: u64,
    threads: usize,
) -> Result<RunOutput, RunError> {
    const KINDS: [&str; 7] = [
        "lyapunov",
        "rate",
        "compare",
        "criterion",
        "percolation",
        "ldp",
        "stats",
    ];
    if !KINDS.contains(&kind) {
        return Err(RunError::Config(ConfigError {
            line: None,
            message: format!("unknown experiment `{kind}`; expected {}", KINDS.join("|")),
        }));
    }
    if let Some(k) = config.str_opt("kind") {
        if k != kind {
            return Err(RunError::Config(ConfigError {
                line: None,
                message: format!("config is for kind `{k}` but subcommand is `{kind}`"),
            }));
        }
    }
    let started = Instant::now();
    let mut art = Artifacts::new(out_dir);
    match kind {
        "lyapunov" => run_lyapunov(config, seed, &mut art)?,
        "rate" => run_rate(config, seed, &mut art)?,
        "compare" => run_compare(config, seed, &mut art)?,
        "criterion" => run_criterion(config, seed, &mut art)?,
        "percolation" => run_percolation(config, seed, &mut art)?,
        "ldp" => run_ldp(config, seed, &mut art)?,
        "stats" => run_stats(config, seed, &mut art)?,
        other => {
            return Err(RunError::Config(ConfigError {
                line: None,
                message: format!(
                    "unknown experiment `{other}`; expected lyapunov|rate|compare|criterion|\
                     percolation|ldp|stats"
                ),
            }))
        }
    }
    art.finish(kind, config, seed, threads, started)
}

fn build_curve(
    config: &Config,
    seed: u64,
    art: &mut Artifacts,
    lambda_max: f64,
) -> Result<
    (
        DistributionSpec,
        CurveMode,
        Vec<i64>,
        rwpot_core::rates::LyapunovCurve,
    ),
    RunError,
> {
    let phi = config.distribution("phi")?;
    let mode = curve_mode(config)?;
    let direction = config.direction("direction", &[1])?;
    let points = config.u64_opt("lambda_points", 17)? as usize;
    if points < 3 {
        return Err(RunError::Config(ConfigError {
            line: None,
            message: "lambda_points must be >= 3".into(),
        }));
    }
    let n_list = config.i64_list("n_list", &[8, 16])?;
    if n_list.len() != 2 {
        return Err(RunError::Config(ConfigError {
            line: None,
            message: "curve n_list must have exactly two entries".into(),
        }));
    }
    let samples = config.u64_opt("samples", 200)?;
    let grid = default_lambda_grid(lambda_max, points);
    let cfg = CurveConfig {
        n_list: [n_list[0], n_list[1]],
        samples,
    };
    let curve = lyapunov_curve(&phi, &direction, &grid, mode, &cfg, seed)?;
    for w in &curve.warnings {
        art.warn(w.clone());
    }
    art.replicas("curve_samples_per_lambda", samples);
    Ok((phi, mode, direction, curve))
}

fn default_lambda_max(
    config: &Config,
    phi: &DistributionSpec,
    mode: CurveMode,
    d: usize,
    x_norms: &[f64],
) -> Result<f64, RunError> {
    if config.has("lambda_max") {
        return Ok(config.f64_req("lambda_max")?);
    }
    let mut needed: f64 = 0.0;
    for &xn in x_norms {
        if xn > 0.0 && xn < 1.0 {
            let b = match mode {
                CurveMode::Quenched => lambda_max_quenched(phi, d, xn),
                CurveMode::Annealed => lambda_max_annealed(phi, d, xn),
            }
            .map_err(RunError::from)?;
            needed = needed.max(b);
        }
    }
    if needed == 0.0 {
        // No finite rate target: a unit-bound default for plain curve runs.
        needed = match mode {
            CurveMode::Quenched => ((2 * d) as f64).ln() + phi.mean(),
            CurveMode::Annealed => ((2 * d) as f64).ln() - phi.laplace_transform(1.0).ln(),
        };
    }
    Ok(needed)
}

fn write_curve_csv(
    art: &mut Artifacts,
    phi: &DistributionSpec,
    mode: CurveMode,
    direction: &[i64],
    curve: &rwpot_core::rates::LyapunovCurve,
) {
    let mut csv = String::from("phi_id,mode,x,lambda,value_nats,stderr_nats\n");
    for p in &curve.points {
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{}",
            phi.id(),
            mode.as_str(),
            join_i64(direction),
            fmt_f64(p.lambda),
            fmt_f64(p.value),
            fmt_f64(p.stderr)
        );
    }
    art.push_csv("curve.csv", csv);
}

fn run_lyapunov(config: &Config, seed: u64, art: &mut Artifacts) -> Result<(), RunError> {
    let phi = config.distribution("phi")?;
    let mode = curve_mode(config)?;
    let direction = config.direction("direction", &[1])?;
    let d = direction.len();
    let lambda_max = default_lambda_max(config, &phi, mode, d, &[])?;
    let (phi, mode, direction, curve) = build_curve(config, seed, art, lambda_max)?;
    write_curve_csv(art, &phi, mode, &direction, &curve);
    Ok(())
}

fn run_rate(config: &Config, seed: u64, art: &mut Artifacts) -> Result<(), RunError> {
    let phi = config.distribution("phi")?;
    let mode = curve_mode(config)?;
    let direction = config.direction("direction", &[1])?;
    let d = direction.len();
    let x_scales = config.f64_list("x_scale", &[0.2, 0.5, 0.8])?;
    let dir_norm = norm1(&direction) as f64;
    let x_norms: Vec<f64> = x_scales.iter().map(|s| s * dir_norm).collect();
    let lambda_max = default_lambda_max(config, &phi, mode, d, &x_norms)?;
    let (phi, mode, direction, curve) = build_curve(config, seed, art, lambda_max)?;
    write_curve_csv(art, &phi, mode, &direction, &curve);

    let mut csv = String::from("phi_id,mode,x,rate_nats,lambda_star_nats\n");
    for (&scale, &xn) in x_scales.iter().zip(&x_norms) {
        let scaled = curve.scaled(scale);
        let (rate_str, lstar_str) = if xn > 1.0 {
            (fmt_f64(f64::INFINITY), fmt_f64(f64::NAN))
        } else if (xn - 1.0).abs() < 1e-12 {
            ("unknown".to_string(), fmt_f64(f64::NAN))
        } else {
            let bracket = match mode {
                CurveMode::Quenched => lambda_max_quenched(&phi, d, xn),
                CurveMode::Annealed => lambda_max_annealed(&phi, d, xn),
            }
            .map_err(RunError::from)?;
            match rate_function(&scaled, bracket).map_err(RunError::from)? {
                RateValue::Finite { rate, .. } => (fmt_f64(rate), fmt_f64(lambda_star(&scaled))),
                RateValue::Infinite => (fmt_f64(f64::INFINITY), fmt_f64(f64::NAN)),
                RateValue::Unknown => ("unknown".to_string(), fmt_f64(f64::NAN)),
            }
        };
        let _ = writeln!(
            csv,
            "{},{},{},{},{}",
            phi.id(),
            mode.as_str(),
            fmt_f64(scale * dir_norm),
            rate_str,
            lstar_str
        );
    }
    art.push_csv("rate.csv", csv);

    // Speed diagnostic for the d=1 unit curve.
    if d == 1 && norm1(&direction) == 1 {
        match km_speed(&curve, &phi) {
            Ok(sp) => {
                for w in &sp.warnings {
                    art.warn(w.clone());
                }
                art.warn(format!(
                    "speed diagnostic: v = {} (initial slope {})",
                    fmt_f64(sp.v),
                    fmt_f64(sp.slope)
                ));
            }
            Err(e) => art.warn(format!("speed diagnostic unavailable: {e}")),
        }
    }
    Ok(())
}

fn run_compare(config: &Config, seed: u64, art: &mut Artifacts) -> Result<(), RunError> {
    let f = config.distribution("F")?;
    let g = config.distribution("G")?;
    let mode = match config.str_opt("mode").unwrap_or("quenched") {
        "quenched" => GapMode::Quenched,
        "annealed" => GapMode::Annealed,
        other => {
            return Err(RunError::Config(ConfigError {
                line: None,
                message: format!("mode must be quenched|annealed, got `{other}`"),
            }))
        }
    };
    let x = config.direction("direction", &[1])?;
    let n_list = config.i64_list("n_list", &[8, 16])?;
    let samples = config.u64_opt("samples", 400)?;
    let witness = witness_for(&f, &g).map_err(RunError::from)?;
    let report = coupled_gap_experiment(&f, &g, &x, &n_list, samples, mode, seed)?;
    for w in &report.warnings {
        art.warn(w.clone());
    }
    art.replicas("gap_samples_per_n", samples);
    art.warn(format!(
        "witness: t'={} eps={} eta0={} H=[{},{}]",
        fmt_f64(witness.t_prime),
        fmt_f64(witness.epsilon),
        fmt_f64(witness.eta0),
        fmt_f64(witness.h_lo),
        fmt_f64(witness.h_hi)
    ));
    let mut csv = String::from("mode,x,n,gap_nats,stderr_nats,per_unit_gap_nats\n");
    for p in &report.per_n {
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{}",
            mode.as_str(),
            join_i64(&x),
            p.n,
            fmt_f64(p.gap),
            fmt_f64(p.gap_se),
            fmt_f64(p.per_unit)
        );
    }
    art.push_csv("gaps.csv", csv);
    Ok(())
}

fn run_criterion(config: &Config, seed: u64, art: &mut Artifacts) -> Result<(), RunError> {
    let f = config.distribution("F")?;
    let g = config.distribution("G")?;
    let n_list = config.i64_list("n_list", &[4, 8, 12])?;
    let samples = config.u64_opt("samples", 400)?;
    let estimator = match config.str_opt("estimator").unwrap_or("potential_mc") {
        "potential_mc" => BetaEstimator::PotentialMc { samples },
        "walk_mc" => BetaEstimator::WalkMc { samples },
        other => {
            return Err(RunError::Config(ConfigError {
                line: None,
                message: format!("estimator must be potential_mc|walk_mc, got `{other}`"),
            }))
        }
    };
    let seq_f = beta_upper_sequence(&f, &[1], &n_list, estimator, seed_stream(seed, 1))?;
    let seq_g = beta_upper_sequence(&g, &[1], &n_list, estimator, seed_stream(seed, 2))?;
    art.replicas("beta_samples_per_n", samples);

    let mut est_csv =
        String::from("phi_id,d,x,n,estimator,value_nats,stderr_nats,capped_fraction,margin\n");
    for (spec, seq) in [(&f, &seq_f), (&g, &seq_g)] {
        for (n, est) in &seq.per_n {
            let _ = writeln!(
                est_csv,
                "{},1,1,{},{},{},{},{},{}",
                spec.id(),
                n,
                est.estimator.as_str(),
                fmt_f64(est.cost.value),
                fmt_f64(est.cost.std_error),
                fmt_f64(est.cost.capped_fraction),
                est.margin.map_or("nan".to_string(), |m| m.to_string())
            );
        }
    }
    art.push_csv("estimates.csv", est_csv);

    let report = criterion_d1(&f, &g, &seq_f.beta().cost, &seq_g.beta().cost)?;
    if !report.key_bound_ok {
        art.warn("ceiling check failed: β̂_F(1) > -log F(0) + 3σ".to_string());
    }
    let mut csv = String::from("f_id,g_id,f0,beta_g_nats,regime\n");
    let _ = writeln!(
        csv,
        "{},{},{},{},{}",
        f.id(),
        g.id(),
        fmt_f64(report.f0),
        fmt_f64(seq_g.beta().cost.value),
        report.regime.as_str()
    );
    art.push_csv("criterion.csv", csv);
    if let Some(common) = report.predicted_common {
        art.warn(format!(
            "coincidence regime: predicted common exponent {}",
            fmt_f64(common)
        ));
    }
    Ok(())
}

fn run_percolation(config: &Config, seed: u64, art: &mut Artifacts) -> Result<(), RunError> {
    let phi = config.distribution("phi")?;
    let m_list = config.f64_list("m_list", &[3.0])?;
    let y = config.direction("direction", &[1, 0])?;
    let n_list = config.i64_list("n_list", &[8])?;
    let samples = config.u64_opt("samples", 50)?;
    let margin_factor = config.i64_opt("margin_factor", 2)?;
    let guard = config.f64_opt("supercrit_guard", 0.75)?;
    art.replicas("percolation_samples", samples);
    let mut csv = String::from("phi_id,m,y,n,mu_hat_per_l1,stderr_per_l1,unreachable_fraction\n");
    for (mi, &m) in m_list.iter().enumerate() {
        let ests = mu_estimate(
            &phi,
            m,
            &y,
            &n_list,
            samples,
            margin_factor,
            guard,
            seed_stream(seed, mi as u64),
        )?;
        for e in ests {
            let _ = writeln!(
                csv,
                "{},{},{},{},{},{},{}",
                phi.id(),
                fmt_f64(e.m),
                join_i64(&y),
                e.n,
                fmt_f64(e.mu_hat),
                fmt_f64(e.stderr),
                fmt_f64(e.unreachable_fraction)
            );
        }
    }
    art.push_csv("percolation.csv", csv);
    Ok(())
}

fn run_ldp(config: &Config, seed: u64, art: &mut Artifacts) -> Result<(), RunError> {
    let phi = config.distribution("phi")?;
    let n = config.i64_opt("n", 128)?;
    let x = config.f64_opt("x", 0.5)?;
    let mode = config.str_opt("mode").unwrap_or("quenched");
    let report = match mode {
        "quenched" => {
            let bbox = LatticeBox::new(vec![-n], vec![n]).map_err(RunError::from)?;
            let omega = realize_seeded(&bbox, &phi, seed);
            ldp_dp_check(&LdpInstance::Quenched(&|i| omega.at(&[i])), n, x)?
        }
        "annealed" => {
            let omega_samples = config.u64_opt("omega_samples", 100)?;
            art.replicas("ldp_omega_samples", omega_samples);
            ldp_dp_check(
                &LdpInstance::Annealed {
                    phi: &phi,
                    omega_samples,
                    seed,
                },
                n,
                x,
            )?
        }
        other => {
            return Err(RunError::Config(ConfigError {
                line: None,
                message: format!("mode must be quenched|annealed, got `{other}`"),
            }))
        }
    };
    for w in &report.warnings {
        art.warn(w.clone());
    }
    if report.parity_adjusted {
        art.warn(format!(
            "endpoint parity adjusted to m = {} (x_used = {})",
            report.m,
            fmt_f64(report.x_used)
        ));
    }
    let mut csv = String::from("phi_id,mode,n,m,x_used,value_nats\n");
    let _ = writeln!(
        csv,
        "{},{},{},{},{},{}",
        phi.id(),
        mode,
        report.n,
        report.m,
        fmt_f64(report.x_used),
        fmt_f64(report.value)
    );
    art.push_csv("ldp.csv", csv);
    Ok(())
}

fn run_stats(config: &Config, seed: u64, art: &mut Artifacts) -> Result<(), RunError> {
    let f = config.distribution("F")?;
    let g = config.distribution("G")?;
    let x = config.direction("direction", &[1])?;
    let d = x.len();
    let n = config.i64_opt("n", 12)?;
    let samples = config.u64_opt("samples", 200)?;
    let probe_samples = config.u64_opt("probe_samples", 2000)?;
    let witness = witness_for(&f, &g).map_err(RunError::from)?;

    // (R, M): configured or searched.
    let (r, m) = match (config.i64_opt("r", 0)?, config.f64_opt("m", 0.0)?) {
        (0, _) | (_, 0.0) => choose_rm(&f, &g, d, probe_samples, seed_stream(seed, 0xC0))?,
        (r, m) => (r, m),
    };
    let kappa = config.f64_opt("kappa", witness.eta0)?;
    let a_param = config.u64_opt("a", 6)?;
    let b_param = config.u64_opt("b", 1)?;

    let report = white_box_prob(
        &f,
        &g,
        witness.eta0,
        m,
        r,
        d,
        probe_samples,
        seed_stream(seed, 0xC1),
    )?;
    let mut csv =
        String::from("r,m,rho_hat,h_measure,p_emp,p_emp_se,p_formula,entropy_condition_ok\n");
    let _ = writeln!(
        csv,
        "{},{},{},{},{},{},{},{}",
        r,
        fmt_f64(m),
        fmt_f64(report.rho_hat),
        fmt_f64(report.h_measure),
        fmt_f64(report.p_emp),
        fmt_f64(report.p_emp_se),
        fmt_f64(report.p_formula),
        rwpot_core::compare::dlog_condition_holds(report.p_emp, report.samples, d)
    );
    art.push_csv("whitebox.csv", csv);

    // Per-trace crossing statistics against κ-good boxes of ω_F. The pass
    // collects completed-crossing durations so the duration cutoff B can be
    // chosen adaptively when not configured.
    let target: Vec<i64> = x.iter().map(|c| c * n).collect();
    let cap = 64 * (n * norm1(&x)).pow(2) as u64;
    let origin = vec![0i64; d];
    let bbox = LatticeBox::hull(&origin, &target, 4 * n * norm1(&x)).map_err(RunError::from)?;
    let mut capped = 0u64;
    let m_cross = config.u64_opt("m_cross", 3)?;
    let mut rows = Vec::new();
    let mut pooled_durations: Vec<usize> = Vec::new();
    for rep in 0..samples {
        let omega_f = realize_seeded(&bbox, &f, seed_stream(seed_stream(seed, 0xC2), rep));
        let mut rng = SplitMix64::new(seed_stream(seed_stream(seed, 0xC3), rep));
        let trace = sample_walk_until(&origin, |s| s == target.as_slice(), cap, &mut rng)
            .map_err(RunError::from)?;
        if trace.hit_index.is_none() {
            capped += 1;
            continue;
        }
        // L_B enters only the within-count, recomputed below from durations.
        let stats = crossing_statistics(&trace, &omega_f, kappa, r, m_cross, 1, &target)?;
        let marked: std::collections::HashSet<Vec<i64>> = {
            // The κ-good labels over the animal, for the majority statistic.
            let hit = trace.hit_index.unwrap();
            let animal =
                rwpot_core::walk::path_animal(&trace, r, hit.max(1)).map_err(RunError::from)?;
            animal
                .into_iter()
                .filter(|label| {
                    let lo: Vec<i64> = label.iter().map(|v| r * v - r / 2).collect();
                    let hi: Vec<i64> = label.iter().map(|v| r * v + r / 2 - 1).collect();
                    LatticeBox::new(lo, hi).is_ok_and(|b| {
                        b.sites().all(|s| omega_f.domain.contains(&s))
                            && b.sites().any(|s| omega_f.at(&s) >= kappa)
                    })
                })
                .collect()
        };
        let majority = rwpot_core::compare::animal_white_fraction(&trace, r, &marked, &target)
            .map(|a| a.majority)
            .unwrap_or(false);
        pooled_durations.extend_from_slice(&stats.durations);
        rows.push((rep, stats, majority));
    }

    // B: configured, else the smallest doubling whose cutoff captures the
    // 1 - A⁻² duration quantile.
    let b_chosen = if config.has("b") {
        b_param
    } else {
        rwpot_core::compare::choose_b(&pooled_durations, r, d, a_param, 1 << 20)
            .ok_or_else(|| RunError::Resource("duration cutoff budget exceeded".into()))?
    };
    let l_b = b_chosen * (r as u64).pow(2 * d as u32);

    let mut csv = String::from(
        "trace,animal_size,good_in_animal,good_fraction,crossings_completed,\
         boxes_crossed_ge_m,crossings_within_lb,majority_flag,site_stat,site_stat_flag\n",
    );
    let mut majority_failures_by_size: Vec<(f64, u64, u64)> = Vec::new();
    for (rep, stats, majority) in &rows {
        let within = stats
            .durations
            .iter()
            .filter(|&&dur| dur as u64 <= l_b)
            .count();
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{},{},{},{},{}",
            rep,
            stats.animal_size,
            stats.good_in_animal,
            fmt_f64(stats.good_fraction),
            stats.crossings_completed,
            stats.boxes_crossed_ge_m,
            within,
            majority,
            stats.site_stat,
            stats.site_stat_flag
        );
        majority_failures_by_size.push((stats.animal_size as f64, u64::from(!majority), 1));
    }
    art.push_csv("crossings.csv", csv);

    // Tabulate majority failures against the animal-size cutoff N and fit
    // the exponential-decay diagnostic to positive rates.
    let mut event_csv = String::from("n_min,traces,failures,failure_rate\n");
    let mut fit_points = Vec::new();
    for n_min in [2usize, 4, 6, 8, 12, 16] {
        let mut total = 0u64;
        let mut failures = 0u64;
        for &(size, fail, one) in &majority_failures_by_size {
            if size >= n_min as f64 {
                total += one;
                failures += fail;
            }
        }
        if total == 0 {
            continue;
        }
        let rate = failures as f64 / total as f64;
        let _ = writeln!(event_csv, "{n_min},{total},{failures},{}", fmt_f64(rate));
        fit_points.push((n_min as f64, rate));
    }
    art.push_csv("animal_event.csv", event_csv);
    if let Some((c1, c2)) = rwpot_core::compare::fit_exponential_decay(&fit_points) {
        art.warn(format!(
            "majority-failure decay fit (diagnostic): rate ≈ {} · exp(-{} · N)",
            fmt_f64(c1),
            fmt_f64(c2)
        ));
    }
    art.replicas("stats_traces", samples);
    art.warn(format!(
        "stats params: R={r} M={} kappa={} M_cross={m_cross} A={a_param} B={b_chosen} L_B={l_b} \
         capped_traces={capped}",
        fmt_f64(m),
        fmt_f64(kappa)
    ));
    Ok(())
}
