//! Lyapunov curves `λ ↦ α(λ,x), β(λ,x)`, the rate functions
//! `I(x) = sup_{λ≥0}(α(λ,x) - λ)` and `J(x) = sup_{λ≥0}(β(λ,x) - λ)`, the
//! slope thresholds `λ*`, the speed read off the right derivative at 0, and
//! an exact d=1 dynamic-programming check of the path-measure asymptotics.
//!
//! Curves are sampled on a geometric λ grid (steep near 0), smoothed by a
//! concave least-squares fit to damp Monte Carlo noise, and the supremum is
//! taken over the piecewise-linear interpolant with a golden-section
//! refinement.

use crate::annealed::{beta_upper_sequence, BetaEstimator};
use crate::dist::DistributionSpec;
use crate::error::{Error, Result};
use crate::quenched::alpha_estimate;
use crate::rng::seed_stream;
use crate::stats::OnlineStats;
use crate::walk::norm1;

/// Quenched or annealed flavor of a curve.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CurveMode {
    Quenched,
    Annealed,
}

impl CurveMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            CurveMode::Quenched => "quenched",
            CurveMode::Annealed => "annealed",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePoint {
    pub lambda: f64,
    pub value: f64,
    pub stderr: f64,
}

/// A sampled map `λ ↦` exponent of the shifted potential at a real direction
/// `x = scale · direction`; values are already scaled by the norm property.
#[derive(Debug, Clone)]
pub struct LyapunovCurve {
    pub direction: Vec<i64>,
    pub scale: f64,
    pub mode: CurveMode,
    pub points: Vec<CurvePoint>,
    pub spec_id: String,
    /// Soft invariant violations (monotonicity/concavity beyond 3σ).
    pub warnings: Vec<String>,
}

impl LyapunovCurve {
    /// `‖x‖₁` of the real direction the curve is evaluated at.
    pub fn x_norm1(&self) -> f64 {
        self.scale * norm1(&self.direction) as f64
    }

    /// The curve at `c·x`: values scale by `c` (exponents are norms).
    pub fn scaled(&self, c: f64) -> LyapunovCurve {
        LyapunovCurve {
            direction: self.direction.clone(),
            scale: self.scale * c,
            mode: self.mode,
            points: self
                .points
                .iter()
                .map(|p| CurvePoint {
                    lambda: p.lambda,
                    value: p.value * c,
                    stderr: p.stderr * c,
                })
                .collect(),
            spec_id: self.spec_id.clone(),
            warnings: self.warnings.clone(),
        }
    }
}

/// Estimator configuration for one curve point.
#[derive(Debug, Clone, Copy)]
pub struct CurveConfig {
    /// Distances used per point (quenched uses the last, annealed the running min).
    pub n_list: [i64; 2],
    pub samples: u64,
}

impl Default for CurveConfig {
    fn default() -> Self {
        CurveConfig {
            n_list: [8, 16],
            samples: 200,
        }
    }
}

/// λ beyond which `α(λ,x) - λ < 0 ≤ I(x)`: the supremum bracket from the
/// exponent upper bounds, quenched flavor.
pub fn lambda_max_quenched(phi: &DistributionSpec, d: usize, x_norm1: f64) -> Result<f64> {
    bracket(x_norm1, ((2 * d) as f64).ln() + phi.mean())
}

/// Annealed flavor of the supremum bracket.
pub fn lambda_max_annealed(phi: &DistributionSpec, d: usize, x_norm1: f64) -> Result<f64> {
    bracket(
        x_norm1,
        ((2 * d) as f64).ln() - phi.laplace_transform(1.0).ln(),
    )
}

fn bracket(x_norm1: f64, unit_bound: f64) -> Result<f64> {
    if !(x_norm1 > 0.0 && x_norm1 < 1.0) {
        return Err(Error::Domain(format!(
            "supremum bracket needs 0 < ‖x‖₁ < 1, got {x_norm1}"
        )));
    }
    Ok(x_norm1 * unit_bound / (1.0 - x_norm1))
}

/// Geometric λ grid: 0 followed by `points - 1` geometric steps up to
/// `lambda_max`, refined near 0 where curves are steepest.
pub fn default_lambda_grid(lambda_max: f64, points: usize) -> Vec<f64> {
    assert!(points >= 3 && lambda_max > 0.0);
    let mut grid = Vec::with_capacity(points);
    grid.push(0.0);
    let k = points - 1;
    let ratio: f64 = 512.0f64.powf(1.0 / (k - 1) as f64);
    for i in 0..k {
        grid.push(lambda_max / 512.0 * ratio.powi(i as i32));
    }
    let last = grid.len() - 1;
    grid[last] = lambda_max;
    grid
}

/// Sample a Lyapunov curve by estimating the exponent of `shift_by(φ, λ)` at
/// each grid λ.
pub fn lyapunov_curve(
    phi: &DistributionSpec,
    direction: &[i64],
    lambda_grid: &[f64],
    mode: CurveMode,
    config: &CurveConfig,
    seed: u64,
) -> Result<LyapunovCurve> {
    if norm1(direction) == 0 {
        return Err(Error::Domain("direction must be nonzero".into()));
    }
    if lambda_grid.is_empty() || lambda_grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Domain("λ grid must be strictly increasing".into()));
    }
    if lambda_grid[0] < 0.0 {
        return Err(Error::Domain("λ grid must start at λ ≥ 0".into()));
    }
    let mut points = Vec::with_capacity(lambda_grid.len());
    for (i, &lambda) in lambda_grid.iter().enumerate() {
        let shifted = phi.shift_by(lambda)?;
        let sub_seed = seed_stream(seed, i as u64);
        let (value, stderr) = match mode {
            CurveMode::Quenched => {
                let n = config.n_list[1];
                let ests = alpha_estimate(&shifted, direction, &[n], config.samples, sub_seed)?;
                let est = &ests[0];
                if est.infinite {
                    return Err(Error::Numeric(format!(
                        "α estimate overflowed at λ={lambda}"
                    )));
                }
                (est.value, est.std_error)
            }
            CurveMode::Annealed => {
                let seq = beta_upper_sequence(
                    &shifted,
                    direction,
                    &config.n_list,
                    BetaEstimator::PotentialMc {
                        samples: config.samples,
                    },
                    sub_seed,
                )?;
                let best = seq.beta();
                if best.cost.infinite {
                    return Err(Error::Numeric(format!(
                        "β estimate overflowed at λ={lambda}"
                    )));
                }
                (best.cost.value, best.cost.std_error)
            }
        };
        points.push(CurvePoint {
            lambda,
            value,
            stderr,
        });
    }
    let mut curve = LyapunovCurve {
        direction: direction.to_vec(),
        scale: 1.0,
        mode,
        points,
        spec_id: phi.id(),
        warnings: Vec::new(),
    };
    curve.warnings = curve_warnings(&curve);
    // Per-point sandwich report against the shifted spec's a priori bounds.
    let d = direction.len();
    let norm = norm1(direction) as f64;
    for (p, &lambda) in curve.points.iter().zip(lambda_grid) {
        let shifted = phi.shift_by(lambda)?;
        let (lo, hi) = match mode {
            CurveMode::Quenched => crate::quenched::sandwich_bounds_quenched(&shifted, d),
            CurveMode::Annealed => crate::annealed::sandwich_bounds_annealed(&shifted, d),
        };
        let per_unit = p.value / norm;
        let tol = 3.0 * p.stderr / norm;
        if per_unit < lo - tol || per_unit > hi + tol {
            curve.warnings.push(format!(
                "sandwich violated at λ={lambda}: {per_unit} outside [{lo}, {hi}] beyond 3σ"
            ));
        }
    }
    Ok(curve)
}

/// Soft checks: values nondecreasing in λ and concave, each within 3σ.
fn curve_warnings(curve: &LyapunovCurve) -> Vec<String> {
    let mut out = Vec::new();
    let p = &curve.points;
    for w in p.windows(2) {
        let tol = 3.0 * w[0].stderr.hypot(w[1].stderr);
        if w[1].value < w[0].value - tol {
            out.push(format!(
                "curve not nondecreasing at λ={} within 3σ",
                w[1].lambda
            ));
        }
    }
    for w in p.windows(3) {
        let h0 = w[1].lambda - w[0].lambda;
        let h1 = w[2].lambda - w[1].lambda;
        let slope0 = (w[1].value - w[0].value) / h0;
        let slope1 = (w[2].value - w[1].value) / h1;
        let tol = 3.0
            * ((w[0].stderr.hypot(w[1].stderr)) / h0).hypot(w[1].stderr.hypot(w[2].stderr) / h1);
        if slope1 > slope0 + tol {
            out.push(format!("curve convex at λ={} beyond 3σ", w[1].lambda));
        }
    }
    out
}

/// Least-squares concave fit of `ys` over abscissas `xs` (Dykstra's
/// alternating projections onto the second-difference halfspaces).
pub fn concave_lsq_fit(xs: &[f64], ys: &[f64]) -> Vec<f64> {
    assert_eq!(xs.len(), ys.len());
    let n = ys.len();
    if n < 3 {
        return ys.to_vec();
    }
    // Halfspace i: slope(i→i+1) - slope(i-1→i) ≤ 0, as c·g ≤ 0.
    let mut constraints = Vec::with_capacity(n - 2);
    for i in 1..n - 1 {
        let h0 = xs[i] - xs[i - 1];
        let h1 = xs[i + 1] - xs[i];
        let mut c = vec![0.0; n];
        c[i - 1] = 1.0 / h0;
        c[i] = -1.0 / h0 - 1.0 / h1;
        c[i + 1] = 1.0 / h1;
        let norm2: f64 = c.iter().map(|v| v * v).sum();
        constraints.push((c, norm2));
    }
    let mut g = ys.to_vec();
    let mut corrections = vec![vec![0.0; n]; constraints.len()];
    for _cycle in 0..20_000 {
        let mut max_change = 0.0f64;
        for (k, (c, norm2)) in constraints.iter().enumerate() {
            // Dykstra: add back the previous correction, project, store new one.
            for (gi, corr) in g.iter_mut().zip(&corrections[k]) {
                *gi += corr;
            }
            let dot: f64 = c.iter().zip(&g).map(|(a, b)| a * b).sum();
            let step = if dot > 0.0 { dot / norm2 } else { 0.0 };
            for i in 0..n {
                let delta = step * c[i];
                g[i] -= delta;
            }
            for (i, corr) in corrections[k].iter_mut().enumerate() {
                let new_corr = if dot > 0.0 { step * c[i] } else { 0.0 };
                max_change = max_change.max((new_corr - *corr).abs());
                *corr = new_corr;
            }
        }
        if max_change < 1e-13 {
            break;
        }
    }
    g
}

/// Upper concave majorant (upper convex hull) of the points; returns the
/// hull vertices in λ order.
pub fn concave_majorant(points: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let mut hull: Vec<(f64, f64)> = Vec::new();
    for &p in points {
        while hull.len() >= 2 {
            let a = hull[hull.len() - 2];
            let b = hull[hull.len() - 1];
            // Keep b only if it lies strictly above chord a→p.
            let cross = (b.0 - a.0) * (p.1 - a.1) - (p.0 - a.0) * (b.1 - a.1);
            if cross >= 0.0 {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(p);
    }
    hull
}

/// The value of a rate function at the curve's direction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RateValue {
    Finite {
        rate: f64,
        argmax_lambda: f64,
    },
    /// `‖x‖₁ > 1`: outside the effective domain.
    Infinite,
    /// `‖x‖₁ = 1`: boundary case left open.
    Unknown,
}

/// `sup_{λ ∈ [0, λ_max]} (curve(λ) - λ)` over the concave-fit piecewise-linear
/// interpolant, refined by golden section.
///
/// `x = 0` gives 0; `‖x‖₁ > 1` is the +∞ flag; the curve must reach
/// `lambda_max` or a coverage error is raised.
pub fn rate_function(curve: &LyapunovCurve, lambda_max: f64) -> Result<RateValue> {
    let xn = curve.x_norm1();
    if xn == 0.0 {
        return Ok(RateValue::Finite {
            rate: 0.0,
            argmax_lambda: 0.0,
        });
    }
    if xn > 1.0 {
        return Ok(RateValue::Infinite);
    }
    if (xn - 1.0).abs() < 1e-12 {
        return Ok(RateValue::Unknown);
    }
    let last = curve
        .points
        .last()
        .ok_or_else(|| Error::Coverage("empty curve".into()))?;
    if last.lambda < lambda_max - 1e-9 {
        return Err(Error::Coverage(format!(
            "curve reaches λ={} but the bracket needs λ_max={}",
            last.lambda, lambda_max
        )));
    }
    let xs: Vec<f64> = curve.points.iter().map(|p| p.lambda).collect();
    let ys: Vec<f64> = curve.points.iter().map(|p| p.value).collect();
    let fit = concave_lsq_fit(&xs, &ys);

    // The objective is piecewise linear and concave, so the vertex maximum is
    // exact; golden-section on the interpolant refines the bracketing segment.
    let objective = |lambda: f64| interp(&xs, &fit, lambda) - lambda;
    let mut best = 0usize;
    for (i, &x) in xs.iter().enumerate() {
        if x <= lambda_max + 1e-12 && objective(x) > objective(xs[best]) {
            best = i;
        }
    }
    let lo = if best == 0 { xs[0] } else { xs[best - 1] };
    let hi = if best + 1 < xs.len() {
        xs[best + 1].min(lambda_max)
    } else {
        lambda_max
    };
    let (lam, val) = golden_section_max(&objective, lo, hi);
    let (rate, argmax_lambda) = if val >= objective(xs[best]) {
        (val, lam)
    } else {
        (objective(xs[best]), xs[best])
    };
    Ok(RateValue::Finite {
        rate,
        argmax_lambda,
    })
}

fn interp(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    if x <= xs[0] {
        return ys[0];
    }
    if x >= xs[xs.len() - 1] {
        return ys[ys.len() - 1];
    }
    let j = xs.partition_point(|&v| v <= x).min(xs.len() - 1);
    let (x0, x1) = (xs[j - 1], xs[j]);
    let (y0, y1) = (ys[j - 1], ys[j]);
    y0 + (y1 - y0) * (x - x0) / (x1 - x0)
}

fn golden_section_max(f: &dyn Fn(f64) -> f64, mut a: f64, mut b: f64) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..200 {
        if b - a < 1e-12 {
            break;
        }
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    let m = 0.5 * (a + b);
    (m, f(m))
}

/// `λ* = inf{λ > 0 : ∂₋(λ) ≤ 1}` over the concave piecewise-linear majorant
/// of the points; 0 when the initial slope is already ≤ 1.
pub fn lambda_star(curve: &LyapunovCurve) -> f64 {
    let pts: Vec<(f64, f64)> = curve.points.iter().map(|p| (p.lambda, p.value)).collect();
    let hull = concave_majorant(&pts);
    if hull.len() < 2 {
        return 0.0;
    }
    for w in hull.windows(2) {
        let slope = (w[1].1 - w[0].1) / (w[1].0 - w[0].0);
        if slope <= 1.0 {
            return w[0].0;
        }
    }
    // Every hull slope exceeds 1: the threshold lies beyond the sampled range.
    hull.last().unwrap().0
}

/// Speed via the reciprocal right derivative at 0 (forward difference on the
/// two smallest grid points). Always a diagnostic: concavity biases the
/// difference quotient downward.
#[derive(Debug, Clone)]
pub struct SpeedEstimate {
    pub v: f64,
    pub slope: f64,
    pub warnings: Vec<String>,
}

pub fn km_speed(curve: &LyapunovCurve, phi: &DistributionSpec) -> Result<SpeedEstimate> {
    if curve.direction.len() != 1 || norm1(&curve.direction) != 1 || curve.scale != 1.0 {
        return Err(Error::Domain(
            "speed needs the d=1 unit-direction curve".into(),
        ));
    }
    if curve.points.len() < 2 {
        return Err(Error::Domain(
            "speed needs at least two curve points".into(),
        ));
    }
    let mut warnings = Vec::new();
    if phi.cdf(0.0) >= 1.0 {
        warnings.push("P(ω=0) = 1: the reciprocal-slope identity does not apply".into());
    }
    if phi.ess_inf() > 0.0 {
        warnings.push("essinf ω > 0: outside the identity's hypothesis".into());
    }
    let (p0, p1) = (&curve.points[0], &curve.points[1]);
    let slope = (p1.value - p0.value) / (p1.lambda - p0.lambda);
    if slope <= 0.0 {
        return Err(Error::Numeric(format!("degenerate initial slope {slope}")));
    }
    Ok(SpeedEstimate {
        v: 1.0 / slope,
        slope,
        warnings,
    })
}

/// Input to the d=1 dynamic-programming check.
pub enum LdpInstance<'a> {
    /// Fixed potential on `[-n, n]`.
    Quenched(&'a dyn Fn(i64) -> f64),
    /// Average the numerator and normalizer over realizations of ω_φ.
    Annealed {
        phi: &'a DistributionSpec,
        omega_samples: u64,
        seed: u64,
    },
}

#[derive(Debug, Clone)]
pub struct LdpReport {
    pub n: i64,
    pub m: i64,
    pub x_used: f64,
    /// `-(1/n) log Q(S_n = m)`.
    pub value: f64,
    pub parity_adjusted: bool,
    pub warnings: Vec<String>,
}

/// Exact DP over positions in `[-n, n]`: the path-measure point mass
/// `Q(S_n = m)` for the endpoint nearest `n·x` with matched parity.
pub fn ldp_dp_check(instance: &LdpInstance, n: i64, x: f64) -> Result<LdpReport> {
    if !(1..=256).contains(&n) {
        return Err(Error::Domain(format!("DP supports 1 ≤ n ≤ 256, got {n}")));
    }
    if x.abs() >= 1.0 {
        return Err(Error::Domain(format!("DP needs ‖x‖₁ < 1, got {x}")));
    }
    let mut m = (n as f64 * x).round() as i64;
    let mut parity_adjusted = false;
    if (n + m) % 2 != 0 {
        // Nearest feasible endpoint; ties resolve toward the origin.
        let (lo, hi) = (m - 1, m + 1);
        m = if (n as f64 * x - lo as f64).abs() <= (hi as f64 - n as f64 * x).abs() {
            lo
        } else {
            hi
        };
        parity_adjusted = true;
    }
    let mut warnings = Vec::new();
    match instance {
        LdpInstance::Quenched(omega) => {
            let (num, z) = dp_mass(*omega, n, m);
            finish_ldp(n, m, num, z, parity_adjusted, warnings)
        }
        LdpInstance::Annealed {
            phi,
            omega_samples,
            seed,
        } => {
            if phi.ess_inf() > 0.0 {
                warnings.push(
                    "essinf ω > 0: the annealed principle's hypothesis fails; value is \
                     computable but has no backed interpretation"
                        .into(),
                );
            }
            if *omega_samples == 0 {
                return Err(Error::Domain("need at least one ω sample".into()));
            }
            // Average numerator and normalizer separately over ω.
            let mut num_stats = OnlineStats::new();
            let mut z_stats = OnlineStats::new();
            let lo_box = crate::field::LatticeBox::new(vec![-n], vec![n])?;
            for r in 0..*omega_samples {
                let omega = crate::field::realize_seeded(&lo_box, phi, seed_stream(*seed, r));
                let (num, z) = dp_mass(&|i| omega.at(&[i]), n, m);
                num_stats.push(num);
                z_stats.push(z);
            }
            finish_ldp(
                n,
                m,
                num_stats.mean(),
                z_stats.mean(),
                parity_adjusted,
                warnings,
            )
        }
    }
}

fn finish_ldp(
    n: i64,
    m: i64,
    num: f64,
    z: f64,
    parity_adjusted: bool,
    warnings: Vec<String>,
) -> Result<LdpReport> {
    if !(num > 0.0 && z > 0.0) {
        return Err(Error::Numeric("DP mass vanished".into()));
    }
    Ok(LdpReport {
        n,
        m,
        x_used: m as f64 / n as f64,
        value: -(num / z).ln() / n as f64,
        parity_adjusted,
        warnings,
    })
}

/// Forward DP of the unnormalized endpoint weights
/// `u_n(j) = E⁰[exp(-Σ_{k<n} ω(S_k)) 1{S_n = j}]`; returns `(u_n(m), Σ_j u_n(j))`.
///
/// Every transition multiplies by exact dyadics when ω ≡ 0, so the zero-field
/// DP reproduces binomial masses to machine precision.
pub fn dp_mass(omega: &dyn Fn(i64) -> f64, n: i64, m: i64) -> (f64, f64) {
    let size = (2 * n + 1) as usize;
    let off = n;
    let mut u = vec![0.0f64; size];
    u[off as usize] = 1.0;
    let mut next = vec![0.0f64; size];
    for _step in 0..n {
        next.iter_mut().for_each(|v| *v = 0.0);
        for j in -n..=n {
            let uj = u[(j + off) as usize];
            if uj == 0.0 {
                continue;
            }
            let w = 0.5 * uj * (-omega(j)).exp();
            if j < n {
                next[(j + 1 + off) as usize] += w;
            }
            if j > -n {
                next[(j - 1 + off) as usize] += w;
            }
        }
        std::mem::swap(&mut u, &mut next);
    }
    let num = u[(m + off) as usize];
    let z: f64 = u.iter().sum();
    (num, z)
}

/// The simple-walk Cramér rate `((1+x)/2)·ln(1+x) + ((1-x)/2)·ln(1-x)`.
pub fn cramer_rate(x: f64) -> f64 {
    assert!(x.abs() < 1.0);
    0.5 * (1.0 + x) * (1.0 + x).ln() + 0.5 * (1.0 - x) * (1.0 - x).ln()
}
