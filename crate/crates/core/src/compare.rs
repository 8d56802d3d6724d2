//! Strict-dominance comparison experiments: coupled quenched/annealed gap
//! measurements, M-white and κ-good box statistics, the Bernoulli relative
//! entropy driving the Chernoff bounds, the (R, M) search, and the d=1
//! annealed criteria with the gambler's-ruin identity.

use std::collections::{HashMap, HashSet};

use crate::dist::{
    coupling_gap_measure, dominance_witness, strictly_dominates, DistributionSpec,
    DominanceWitness, DEFAULT_GRID_POINTS,
};
use crate::error::{Error, Result};
use crate::exec;
use crate::field::{realize, sample_uniform_field, LatticeBox, PotentialField};
use crate::quenched::{coupled_costs_quenched, coupled_values_quenched, TruncatedDomain};
use crate::rng::seed_stream;
use crate::stats::{sample_cov, CostEstimate, OnlineStats};
use crate::walk::{box_crossings, box_index, hit_index_of_box, norm1, path_animal, WalkTrace};

/// Bernoulli relative entropy `D(δ‖p) = δ log(δ/p) + (1-δ) log((1-δ)/(1-p))`
/// for `0 < δ < p < 1`.
pub fn relative_entropy(delta: f64, p: f64) -> Result<f64> {
    if !(0.0 < delta && delta < p && p < 1.0) {
        return Err(Error::Domain(format!(
            "relative entropy needs 0 < δ < p < 1, got δ={delta}, p={p}"
        )));
    }
    Ok(delta * (delta / p).ln() + (1.0 - delta) * ((1.0 - delta) / (1.0 - p)).ln())
}

/// `δ₀ = 1 - (1 - e^{-η₀}) (2d e^M)^{-2dR}`: the per-crossing contraction
/// factor extracted from the white-box gap argument.
pub fn delta0(eta0: f64, d: usize, r: i64, m: f64) -> Result<f64> {
    if eta0.is_nan() || eta0 <= 0.0 {
        return Err(Error::Domain("η₀ must be positive".into()));
    }
    let base = 1.0 / (2.0 * d as f64 * m.exp());
    Ok(1.0 - (1.0 - (-eta0).exp()) * base.powi((2 * d as i32) * r as i32))
}

/// An R-box is M-white when some site has coupled gap ≥ η₀ and every site
/// has `ω_G ≤ M`.
pub fn classify_white(
    sites: &[Vec<i64>],
    omega_f: &PotentialField,
    omega_g: &PotentialField,
    eta0: f64,
    m: f64,
) -> bool {
    let mut has_gap = false;
    for site in sites {
        let g = omega_g.at(site);
        if g > m {
            return false;
        }
        if omega_f.at(site) - g >= eta0 {
            has_gap = true;
        }
    }
    has_gap
}

/// An R-box is κ-good when it contains a site with `ω_F ≥ κ`.
pub fn classify_good(sites: &[Vec<i64>], omega_f: &PotentialField, kappa: f64) -> bool {
    sites.iter().any(|s| omega_f.at(s) >= kappa)
}

/// Empirical and analytic white-box probabilities.
#[derive(Debug, Clone)]
pub struct WhiteBoxReport {
    pub r: i64,
    pub m: f64,
    /// Empirical frequency of M-white over sampled boxes.
    pub p_emp: f64,
    pub p_emp_se: f64,
    /// The large-M formula `1 - (1-ρ̂)^{R^d}`.
    pub p_formula: f64,
    /// Grid measure of `{s : F⁻¹(s) - G⁻¹(s) ≥ η₀}`.
    pub rho_hat: f64,
    /// `|𝓗|`; the analytic lower bound on ρ̂.
    pub h_measure: f64,
    pub samples: u64,
}

/// Estimate `p_{R,M} = P(Λ_R(0) is M-white)` empirically and report it with
/// the analytic coupling quantities.
#[allow(clippy::too_many_arguments)]
pub fn white_box_prob(
    f: &DistributionSpec,
    g: &DistributionSpec,
    eta0: f64,
    m: f64,
    r: i64,
    d: usize,
    samples: u64,
    seed: u64,
) -> Result<WhiteBoxReport> {
    let witness_measure = dominance_witness(f, g)?.h_measure();
    let bbox = box_of_origin(r, d)?;
    let sites: Vec<Vec<i64>> = bbox.sites().collect();
    let hits: u64 = exec::map_replicas(samples, |rep| {
        let u = sample_uniform_field(&bbox, seed_stream(seed, rep));
        let of = realize(&u, f);
        let og = realize(&u, g);
        u64::from(classify_white(&sites, &of, &og, eta0, m))
    })
    .iter()
    .sum();
    let p_emp = hits as f64 / samples as f64;
    let p_emp_se = (p_emp * (1.0 - p_emp) / samples as f64).sqrt();
    let rho_hat = coupling_gap_measure(f, g, eta0, DEFAULT_GRID_POINTS);
    let p_formula = 1.0 - (1.0 - rho_hat).powi(r.pow(d as u32) as i32);
    Ok(WhiteBoxReport {
        r,
        m,
        p_emp,
        p_emp_se,
        p_formula,
        rho_hat,
        h_measure: witness_measure,
        samples,
    })
}

fn box_of_origin(r: i64, d: usize) -> Result<LatticeBox> {
    if r < 2 || r % 2 != 0 {
        return Err(Error::Domain(format!("R must be even and >= 2, got {r}")));
    }
    LatticeBox::new(vec![-r / 2; d], vec![r / 2 - 1; d])
}

/// Smallest even `R` and smallest `M` whose estimated white probability
/// satisfies `D(1/2 ‖ p) > 2 log 2d` with a 3σ margin, searched by doubling
/// then bisecting in that order.
pub fn choose_rm(
    f: &DistributionSpec,
    g: &DistributionSpec,
    d: usize,
    samples: u64,
    seed: u64,
) -> Result<(i64, f64)> {
    const R_BUDGET: i64 = 256;
    const M_BUDGET: f64 = 64.0;
    let witness = dominance_witness(f, g)?;
    let eta0 = witness.eta0;

    let condition = |r: i64, m: f64, probe: u64| -> Result<bool> {
        let report = white_box_prob(f, g, eta0, m, r, d, samples, seed_stream(seed, probe))?;
        Ok(dlog_condition_holds(report.p_emp, report.samples, d))
    };

    // Phase 1: double R (with M at its budget) until the condition holds.
    let mut probe = 0u64;
    let mut r_hi = 2i64;
    loop {
        probe += 1;
        if condition(r_hi, M_BUDGET, probe)? {
            break;
        }
        r_hi *= 2;
        if r_hi > R_BUDGET {
            return Err(Error::Resource(format!(
                "no even R ≤ {R_BUDGET} satisfies the entropy condition"
            )));
        }
    }
    // Bisect to the smallest even R in (r_hi/2, r_hi].
    let mut lo = r_hi / 2; // fails (or 1)
    let mut hi = r_hi; // holds
    while hi - lo > 2 {
        let mid = (lo + hi) / 2;
        let mid = mid + (mid % 2); // keep even
        if mid == hi || mid == lo {
            break;
        }
        probe += 1;
        if condition(mid, M_BUDGET, probe)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let r_star = hi;

    // Phase 2: smallest M by doubling then bisecting, at R = r_star.
    let mut m_hi = 1.0f64;
    loop {
        probe += 1;
        if condition(r_star, m_hi, probe)? {
            break;
        }
        m_hi *= 2.0;
        if m_hi > M_BUDGET {
            return Err(Error::Resource(format!(
                "no M ≤ {M_BUDGET} satisfies the entropy condition at R = {r_star}"
            )));
        }
    }
    let mut m_lo = m_hi / 2.0;
    if m_hi <= 1.0 {
        return Ok((r_star, 1.0));
    }
    for _ in 0..8 {
        let mid = 0.5 * (m_lo + m_hi);
        probe += 1;
        if condition(r_star, mid, probe)? {
            m_hi = mid;
        } else {
            m_lo = mid;
        }
    }
    Ok((r_star, m_hi.ceil()))
}

/// `D(1/2 ‖ p̂ - 3σ) > 2 log 2d`, with the rule-of-three lower bound when the
/// empirical frequency saturates at 1.
pub fn dlog_condition_holds(p_emp: f64, samples: u64, d: usize) -> bool {
    let p_lo = if p_emp >= 1.0 {
        1.0 - 3.0 / samples as f64
    } else {
        p_emp - 3.0 * (p_emp * (1.0 - p_emp) / samples as f64).sqrt()
    };
    if p_lo <= 0.5 {
        return false;
    }
    if p_lo >= 1.0 {
        return true;
    }
    match relative_entropy(0.5, p_lo) {
        Ok(dkl) => dkl > 2.0 * ((2 * d) as f64).ln(),
        Err(_) => false,
    }
}

/// Marked fraction of the realized path animal (box labels visited before
/// the target box is hit) and the majority flag.
#[derive(Debug, Clone)]
pub struct AnimalFraction {
    pub animal_size: usize,
    pub marked_count: usize,
    pub fraction: f64,
    pub majority: bool,
}

pub fn animal_white_fraction(
    trace: &WalkTrace,
    r: i64,
    marked: &HashSet<Vec<i64>>,
    target: &[i64],
) -> Result<AnimalFraction> {
    let stop = hit_index_of_box(trace, target, r)?
        .ok_or_else(|| Error::Precondition("trace never reached the target box".into()))?;
    let animal = path_animal(trace, r, stop.max(1))?;
    let marked_count = animal.iter().filter(|v| marked.contains(*v)).count();
    let fraction = if animal.is_empty() {
        0.0
    } else {
        marked_count as f64 / animal.len() as f64
    };
    Ok(AnimalFraction {
        animal_size: animal.len(),
        marked_count,
        fraction,
        majority: fraction >= 0.5,
    })
}

/// d=1 check of the animal-majority event: every interval of box labels
/// containing the origin with at least `n_min` boxes has marked fraction
/// ≥ 1/2, within the window `[-w, w]` of labels.
pub fn event_animal_majority_d1(marked: &[bool], origin: usize, n_min: usize) -> bool {
    let len = marked.len();
    let mut prefix = vec![0usize; len + 1];
    for (i, &m) in marked.iter().enumerate() {
        prefix[i + 1] = prefix[i] + usize::from(m);
    }
    for a in 0..=origin {
        for b in origin..len {
            let size = b - a + 1;
            if size < n_min {
                continue;
            }
            let whites = prefix[b + 1] - prefix[a];
            if 2 * whites < size {
                return false;
            }
        }
    }
    true
}

/// d=1 site-count event: `#{z : 1 ≤ ℓ_z(H(n)) ≤ K} ≥ δ·n` for a trace that
/// has hit its target.
pub fn l_prime_event_d1(trace: &WalkTrace, k_max: u64, delta: f64, n: i64) -> Result<bool> {
    let hit = trace
        .hit_index
        .ok_or_else(|| Error::Precondition("trace did not reach its target".into()))?;
    let lt = crate::walk::local_times(trace, hit)?;
    let count = lt
        .counts
        .values()
        .filter(|&&c| c >= 1 && c <= k_max)
        .count();
    Ok(count as f64 >= delta * n as f64)
}

/// Chernoff-with-animal-count failure bound for the majority event,
/// `exp(-N (D(1/2‖p) - 2 log 2d))`, clamped to a probability.
pub fn event_failure_bound(n_min: usize, p: f64, d: usize) -> f64 {
    if p <= 0.5 {
        return 1.0;
    }
    let exponent = match relative_entropy(0.5, p) {
        Ok(dkl) => dkl - 2.0 * ((2 * d) as f64).ln(),
        Err(_) => f64::INFINITY,
    };
    (-(n_min as f64) * exponent).exp().min(1.0)
}

/// Per-trace crossing statistics for the κ-good box events.
#[derive(Debug, Clone)]
pub struct CrossingStats {
    /// `#𝒜_R`: boxes visited strictly before the target site is hit.
    pub animal_size: usize,
    /// κ-good boxes among the animal.
    pub good_in_animal: usize,
    pub good_fraction: f64,
    /// Completed entrance/exit pairs into good boxes up to the hit.
    pub crossings_completed: usize,
    /// Good boxes entered at least `M` times.
    pub boxes_crossed_ge_m: usize,
    /// Completed crossings with duration ≤ L_B.
    pub crossings_within_lb: usize,
    /// Durations of the completed crossings, for duration-threshold scans.
    pub durations: Vec<usize>,
    /// `#{z : 1 ≤ ℓ_z(H) ≤ M·L_B}`.
    pub site_stat: usize,
    /// `n‖x‖₁ / (12 d R)`.
    pub site_stat_threshold: f64,
    pub site_stat_flag: bool,
}

/// Evaluate the crossing statistics of one trace against the κ-good boxes of
/// `ω_F`. The trace must have hit `target`; `m_cross` is the repeat-visit
/// threshold and `l_b = B·R^{2d}` the duration cutoff.
#[allow(clippy::too_many_arguments)]
pub fn crossing_statistics(
    trace: &WalkTrace,
    omega_f: &PotentialField,
    kappa: f64,
    r: i64,
    m_cross: u64,
    l_b: u64,
    target: &[i64],
) -> Result<CrossingStats> {
    let hit = trace
        .hit_index
        .ok_or_else(|| Error::Precondition("trace did not reach the target".into()))?;
    let d = trace.dim();

    // κ-good labels over the animal's bounding region.
    let animal = path_animal(trace, r, hit.max(1))?;
    let mut good: HashSet<Vec<i64>> = HashSet::new();
    for label in &animal {
        let sites = box_sites(label, r);
        if sites.iter().all(|s| omega_f.domain.contains(s)) && classify_good(&sites, omega_f, kappa)
        {
            good.insert(label.clone());
        }
    }
    let good_in_animal = animal.iter().filter(|v| good.contains(*v)).count();

    let crossings = box_crossings(trace, &good, r)?;
    let completed: Vec<_> = crossings
        .iter()
        .filter(|c| c.exit.is_some_and(|t| t <= hit))
        .collect();
    let mut per_box: HashMap<Vec<i64>, u64> = HashMap::new();
    for c in &completed {
        let label = box_index(trace.position(c.entry), r)?;
        *per_box.entry(label).or_insert(0) += 1;
    }
    let boxes_crossed_ge_m = per_box.values().filter(|&&n| n >= m_cross).count();
    let durations: Vec<usize> = completed.iter().map(|c| c.duration(trace.len())).collect();
    let crossings_within_lb = durations.iter().filter(|&&d| d as u64 <= l_b).count();

    let lt = crate::walk::local_times(trace, hit)?;
    let site_stat = lt
        .counts
        .values()
        .filter(|&&c| c >= 1 && c <= m_cross * l_b)
        .count();
    let site_stat_threshold = norm1(target) as f64 / (12.0 * d as f64 * r as f64);

    Ok(CrossingStats {
        animal_size: animal.len(),
        good_in_animal,
        good_fraction: if animal.is_empty() {
            0.0
        } else {
            good_in_animal as f64 / animal.len() as f64
        },
        crossings_completed: completed.len(),
        boxes_crossed_ge_m,
        crossings_within_lb,
        durations,
        site_stat,
        site_stat_threshold,
        site_stat_flag: site_stat as f64 >= site_stat_threshold,
    })
}

/// Smallest `B` (doubling from 1) whose duration cutoff `L_B = B·R^{2d}`
/// captures at least the fraction `1 - A⁻²` of the pooled crossing
/// durations; `None` when even the budget cap falls short.
pub fn choose_b(durations: &[usize], r: i64, d: usize, a: u64, b_budget: u64) -> Option<u64> {
    if durations.is_empty() {
        return Some(1);
    }
    let need = 1.0 - 1.0 / (a * a) as f64;
    let base = (r as u64).pow(2 * d as u32);
    let mut b = 1u64;
    while b <= b_budget {
        let l_b = b * base;
        let within = durations.iter().filter(|&&x| x as u64 <= l_b).count();
        if within as f64 / durations.len() as f64 >= need {
            return Some(b);
        }
        b *= 2;
    }
    None
}

/// Least-squares fit of `rate ≈ C₁ e^{-C₂ N}` on the positive rates, in log
/// space. Purely diagnostic; returns `None` with fewer than two usable
/// points.
pub fn fit_exponential_decay(points: &[(f64, f64)]) -> Option<(f64, f64)> {
    let usable: Vec<(f64, f64)> = points
        .iter()
        .filter(|(_, r)| *r > 0.0)
        .map(|&(n, r)| (n, r.ln()))
        .collect();
    if usable.len() < 2 {
        return None;
    }
    let m = usable.len() as f64;
    let sx: f64 = usable.iter().map(|(n, _)| n).sum();
    let sy: f64 = usable.iter().map(|(_, y)| y).sum();
    let sxx: f64 = usable.iter().map(|(n, _)| n * n).sum();
    let sxy: f64 = usable.iter().map(|(n, y)| n * y).sum();
    let denom = m * sxx - sx * sx;
    if denom.abs() < 1e-12 {
        return None;
    }
    let slope = (m * sxy - sx * sy) / denom;
    let intercept = (sy - slope * sx) / m;
    Some((intercept.exp(), -slope))
}

fn box_sites(label: &[i64], r: i64) -> Vec<Vec<i64>> {
    let lo: Vec<i64> = label.iter().map(|v| r * v - r / 2).collect();
    let hi: Vec<i64> = label.iter().map(|v| r * v + r / 2 - 1).collect();
    LatticeBox::new(lo, hi)
        .expect("R-box is nonempty")
        .sites()
        .collect()
}

/// Quenched or annealed flavor of a gap experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GapMode {
    Quenched,
    Annealed,
}

impl GapMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            GapMode::Quenched => "quenched",
            GapMode::Annealed => "annealed",
        }
    }
}

#[derive(Debug, Clone)]
pub struct GapPoint {
    pub n: i64,
    pub gap: f64,
    pub gap_se: f64,
    pub per_unit: f64,
    pub per_unit_se: f64,
}

/// Result of a coupled strict-dominance gap experiment.
#[derive(Debug, Clone)]
pub struct GapReport {
    pub mode: GapMode,
    pub x: Vec<i64>,
    pub per_n: Vec<GapPoint>,
    /// One-sided z-score of the last per-unit gap against 0.
    pub z_positive: f64,
    /// |per-unit(n_last) - per-unit(n_first)| in combined σ units.
    pub stability_z: f64,
    pub warnings: Vec<String>,
}

/// Measure `cost_F - cost_G` under the shared-uniform coupling.
///
/// Quenched mode solves both costs per coupled sample and the per-sample gap
/// is nonnegative exactly; annealed mode differences the two potential-route
/// estimates on shared samples, with the delta-method error accounting for
/// their covariance.
pub fn coupled_gap_experiment(
    f: &DistributionSpec,
    g: &DistributionSpec,
    x: &[i64],
    n_list: &[i64],
    samples: u64,
    mode: GapMode,
    seed: u64,
) -> Result<GapReport> {
    if !strictly_dominates(f, g).dominates {
        return Err(Error::Precondition(format!(
            "{} does not strictly dominate {}",
            f.id(),
            g.id()
        )));
    }
    if norm1(x) == 0 {
        return Err(Error::Domain("direction x must be nonzero".into()));
    }
    let d = x.len();
    let origin = vec![0i64; d];
    let mut warnings = Vec::new();
    let mut per_n = Vec::with_capacity(n_list.len());
    for (ni, &n) in n_list.iter().enumerate() {
        let target: Vec<i64> = x.iter().map(|c| c * n).collect();
        let unit = (n * norm1(x)) as f64;
        let margin = 2 * n * norm1(x).max(1);
        let domain = TruncatedDomain::from_endpoints(&origin, &target, margin)?;
        let bbox = LatticeBox::hull(&origin, &target, margin)?;
        let n_seed = seed_stream(seed, ni as u64);
        match mode {
            GapMode::Quenched => {
                let gaps: Vec<Result<f64>> = exec::map_replicas(samples, |rep| {
                    let u = sample_uniform_field(&bbox, seed_stream(n_seed, rep));
                    let of = realize(&u, f);
                    let og = realize(&u, g);
                    let (af, ag) = coupled_costs_quenched(&of, &og, &origin, &target, &domain)?;
                    if af - ag < 0.0 || (af - ag).is_nan() {
                        return Err(Error::CouplingViolation(format!(
                            "negative coupled gap {} at replica {rep}",
                            af - ag
                        )));
                    }
                    Ok(af - ag)
                });
                let mut stats = OnlineStats::new();
                for gap in gaps {
                    stats.push(gap?);
                }
                per_n.push(GapPoint {
                    n,
                    gap: stats.mean(),
                    gap_se: stats.std_error(),
                    per_unit: stats.mean() / unit,
                    per_unit_se: stats.std_error() / unit,
                });
            }
            GapMode::Annealed => {
                let pairs: Vec<Result<(f64, f64)>> = exec::map_replicas(samples, |rep| {
                    let u = sample_uniform_field(&bbox, seed_stream(n_seed, rep));
                    let of = realize(&u, f);
                    let og = realize(&u, g);
                    coupled_values_quenched(&of, &og, &origin, &target, &domain)
                });
                let mut efs = Vec::with_capacity(samples as usize);
                let mut egs = Vec::with_capacity(samples as usize);
                for p in pairs {
                    let (ef, eg) = p?;
                    efs.push(ef);
                    egs.push(eg);
                }
                let mf = OnlineStats::from_samples(efs.iter().copied());
                let mg = OnlineStats::from_samples(egs.iter().copied());
                if mf.mean() <= 0.0 || mg.mean() <= 0.0 {
                    per_n.push(GapPoint {
                        n,
                        gap: f64::INFINITY,
                        gap_se: 0.0,
                        per_unit: f64::INFINITY,
                        per_unit_se: 0.0,
                    });
                    continue;
                }
                let gap = -mf.mean().ln() + mg.mean().ln();
                // Var(log m_G - log m_F) by the delta method with covariance.
                let nf = samples as f64;
                let var = (mf.variance() / mf.mean().powi(2) + mg.variance() / mg.mean().powi(2)
                    - 2.0 * sample_cov(&efs, &egs) / (mf.mean() * mg.mean()))
                    / nf;
                let gap_se = var.max(0.0).sqrt();
                per_n.push(GapPoint {
                    n,
                    gap,
                    gap_se,
                    per_unit: gap / unit,
                    per_unit_se: gap_se / unit,
                });
            }
        }
    }
    if mode == GapMode::Annealed && d == 1 {
        // The d=1 annealed comparison needs F(0) < e^{-β_G(1)}; check it on a
        // fresh estimate of β_G.
        let est = crate::annealed::beta_upper_sequence(
            g,
            x,
            n_list,
            crate::annealed::BetaEstimator::PotentialMc { samples },
            seed_stream(seed, 0xBEBE),
        )?;
        let bg = est.beta();
        let ceiling = (-bg.cost.value).exp();
        if f.cdf(0.0) >= ceiling {
            warnings.push(format!(
                "additivity condition fails on estimates: F(0) = {} ≥ e^(-β̂_G(1)) = {ceiling}; \
                 coincidence regime expected",
                f.cdf(0.0)
            ));
        }
    }
    let last = per_n.last().expect("n_list nonempty");
    let z_positive = if last.per_unit_se > 0.0 {
        last.per_unit / last.per_unit_se
    } else if last.per_unit > 0.0 {
        f64::INFINITY
    } else {
        0.0
    };
    let first = &per_n[0];
    let comb = first.per_unit_se.hypot(last.per_unit_se);
    let stability_z = if comb > 0.0 {
        (last.per_unit - first.per_unit).abs() / comb
    } else if (last.per_unit - first.per_unit).abs() < 1e-9 {
        0.0
    } else {
        f64::INFINITY
    };
    Ok(GapReport {
        mode,
        x: x.to_vec(),
        per_n,
        z_positive,
        stability_z,
        warnings,
    })
}

/// Regime decided by the d=1 annealed criteria.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    StrictGap,
    Coincide,
    Undetermined,
}

impl Regime {
    pub fn as_str(&self) -> &'static str {
        match self {
            Regime::StrictGap => "strict_gap",
            Regime::Coincide => "coincide",
            Regime::Undetermined => "undetermined",
        }
    }
}

#[derive(Debug, Clone)]
pub struct CriterionReport {
    pub regime: Regime,
    pub f0: f64,
    pub g0: f64,
    /// `e^{-β̂_G(1)}` interval endpoints from ±3σ.
    pub threshold_lo: f64,
    pub threshold_hi: f64,
    /// Predicted common value `-log F(0)` in the coincidence regime.
    pub predicted_common: Option<f64>,
    /// `β̂_F(1) ≤ -log F(0) + 3σ` verified.
    pub key_bound_ok: bool,
}

/// d=1 criterion: decide strict gap vs coincidence from `F(0)`, `G(0)` and
/// the confidence interval of `β̂_G(1)`, verifying the ceiling
/// `β_F(1) ≤ -log F(0)` on the estimates.
pub fn criterion_d1(
    f: &DistributionSpec,
    g: &DistributionSpec,
    beta_f: &CostEstimate,
    beta_g: &CostEstimate,
) -> Result<CriterionReport> {
    if !strictly_dominates(f, g).dominates {
        return Err(Error::Precondition(format!(
            "{} does not strictly dominate {}",
            f.id(),
            g.id()
        )));
    }
    let f0 = f.cdf(0.0);
    let g0 = g.cdf(0.0);
    let threshold_lo = (-(beta_g.value + 3.0 * beta_g.std_error)).exp();
    let threshold_hi = (-(beta_g.value - 3.0 * beta_g.std_error)).exp();
    let key_bound_ok = if f0 > 0.0 {
        beta_f.value <= -f0.ln() + 3.0 * beta_f.std_error
    } else {
        true // -log F(0) = ∞
    };
    // F(0)=0 and F(0)<G(0) force the gap; otherwise compare against the
    // e^(-β̂_G) confidence interval.
    let regime = if f0 == 0.0 || f0 < g0 || f0 < threshold_lo {
        Regime::StrictGap
    } else if f0 >= threshold_hi {
        Regime::Coincide
    } else {
        Regime::Undetermined
    };
    let predicted_common = match regime {
        Regime::Coincide => Some(-f0.ln()),
        _ => None,
    };
    Ok(CriterionReport {
        regime,
        f0,
        g0,
        threshold_lo,
        threshold_hi,
        predicted_common,
        key_bound_ok,
    })
}

/// `P⁰(H(n) < H(-m)) = m/(n+m)`: the gambler's-ruin identity.
pub fn gamblers_ruin(n: u64, m: u64) -> Result<f64> {
    if n < 1 || m < 1 {
        return Err(Error::Domain("gambler's ruin needs n, m >= 1".into()));
    }
    Ok(m as f64 / (n + m) as f64)
}

/// Monte Carlo frequency of hitting `+n` before `-m`.
pub fn gamblers_ruin_mc(n: i64, m: i64, walks: u64, seed: u64) -> Result<(f64, f64)> {
    if n < 1 || m < 1 {
        return Err(Error::Domain("gambler's ruin needs n, m >= 1".into()));
    }
    let wins: u64 = exec::map_replicas(walks, |r| {
        let mut rng = crate::rng::SplitMix64::new(seed_stream(seed, r));
        let t = crate::walk::sample_walk_until(
            &[0],
            |s| s[0] == n || s[0] == -m,
            u64::MAX / 2,
            &mut rng,
        )
        .expect("cap >= 1");
        let hit = t.hit_index.expect("two-sided exit is finite a.s.");
        u64::from(t.position(hit)[0] == n)
    })
    .iter()
    .sum();
    let freq = wins as f64 / walks as f64;
    let se = (freq * (1.0 - freq) / walks as f64).sqrt();
    Ok((freq, se))
}

/// One grid entry of a rate-function difference scan.
#[derive(Debug, Clone, Copy)]
pub struct RateScanPoint {
    pub x: f64,
    pub j_f: f64,
    pub j_g: f64,
    pub se: f64,
}

#[derive(Debug, Clone)]
pub struct ThresholdReport {
    /// Largest grid x whose difference is within noise of 0, if any.
    pub v0: Option<f64>,
    pub resolved: bool,
    /// All differences nonnegative (within 3σ).
    pub monotone_ok: bool,
    pub rows: Vec<RateScanPoint>,
    pub warnings: Vec<String>,
}

/// Scan `Ĵ_F - Ĵ_G` over an x grid and locate the coincidence threshold.
///
/// `additivity_fails` states whether `F(0) ≥ e^{-β̂_G(1)}` held on estimates
/// (the regime in which a threshold is predicted); when it does not, the scan
/// still runs but a warning records that a gap on all of (0,1) is expected.
pub fn threshold_scan(rows: Vec<RateScanPoint>, additivity_fails: bool) -> ThresholdReport {
    let mut warnings = Vec::new();
    if !additivity_fails {
        warnings.push(
            "additivity condition holds on estimates: a gap on all 0 < |x| < 1 is predicted; \
             no coincidence threshold expected"
                .into(),
        );
    }
    let mut monotone_ok = true;
    let mut v0 = None;
    for p in &rows {
        let diff = p.j_f - p.j_g;
        if diff < -3.0 * p.se {
            monotone_ok = false;
        }
        if diff.abs() <= 3.0 * p.se {
            let candidate = p.x;
            v0 = Some(v0.map_or(candidate, |cur: f64| cur.max(candidate)));
        }
    }
    let resolved = v0.is_some();
    if !resolved {
        warnings.push("no coincidence region resolved; v₀ ≈ 0".into());
    }
    ThresholdReport {
        v0,
        resolved,
        monotone_ok,
        rows,
        warnings,
    }
}

/// Convenience: the three coupling quantities of a strict pair.
pub fn witness_for(f: &DistributionSpec, g: &DistributionSpec) -> Result<DominanceWitness> {
    dominance_witness(f, g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::annealed::{beta_upper_sequence, BetaEstimator};
    use crate::quenched::constant_potential_cost_d1;
    use crate::rng::SplitMix64;
    use crate::walk::sample_walk_until;

    const LN2: f64 = std::f64::consts::LN_2;

    fn bern_f() -> DistributionSpec {
        DistributionSpec::atomic(vec![(0.0, 0.3), (1.0, 0.7)]).unwrap()
    }
    fn bern_g() -> DistributionSpec {
        DistributionSpec::atomic(vec![(0.0, 0.6), (1.0, 0.4)]).unwrap()
    }

    #[test]
    fn relative_entropy_values() {
        let d = relative_entropy(0.5, 0.9).unwrap();
        assert!((d - 0.5108256238).abs() < 1e-9, "{d}");
        let d99 = relative_entropy(0.5, 0.99).unwrap();
        assert!((d99 - 1.6144).abs() < 1e-3);
        assert!(d99 > d);
        let near = relative_entropy(0.9 - 1e-9, 0.9).unwrap();
        assert!(near < 1e-12);
        assert!(relative_entropy(0.9, 0.5).is_err());
        assert!(relative_entropy(0.0, 0.5).is_err());
    }

    #[test]
    fn delta0_values_and_monotonicity() {
        let d = delta0(LN2, 1, 2, 1.0).unwrap();
        assert!((d - 0.9994276363).abs() < 1e-8, "{d}");
        assert!(delta0(0.5, 1, 2, 1.0).unwrap() < delta0(0.25, 1, 2, 1.0).unwrap());
        assert!(delta0(0.5, 1, 2, 2.0).unwrap() > delta0(0.5, 1, 2, 1.0).unwrap());
        assert!(delta0(0.5, 1, 4, 1.0).unwrap() > delta0(0.5, 1, 2, 1.0).unwrap());
        // η₀ → 0 pushes δ₀ → 1.
        assert!(delta0(1e-9, 1, 2, 1.0).unwrap() > 1.0 - 1e-9);
    }

    #[test]
    fn white_classification() {
        let bbox = LatticeBox::new(vec![-1], vec![0]).unwrap();
        let sites: Vec<Vec<i64>> = bbox.sites().collect();
        let hi = PotentialField::constant(bbox.clone(), 1.0).unwrap();
        let lo = PotentialField::constant(bbox.clone(), 0.0).unwrap();
        assert!(classify_white(&sites, &hi, &lo, 0.5, 1.0));
        assert!(!classify_white(&sites, &hi, &hi, 0.5, 10.0));
        let over = PotentialField::constant(bbox, 2.5).unwrap();
        assert!(!classify_white(&sites, &over, &over, 0.0001, 1.0));
    }

    #[test]
    fn good_box_probability_formula() {
        // q_{κ,R} = 1 - P(ω_F < κ)^{R^d} in the i.i.d. setting.
        let f = bern_f();
        let (kappa, r) = (0.5, 2i64);
        let bbox = LatticeBox::new(vec![-1], vec![0]).unwrap();
        let sites: Vec<Vec<i64>> = bbox.sites().collect();
        let samples = 4000u64;
        let hits: u64 = exec::map_replicas(samples, |rep| {
            let u = sample_uniform_field(&bbox, seed_stream(2020, rep));
            let of = realize(&u, &f);
            u64::from(classify_good(&sites, &of, kappa))
        })
        .iter()
        .sum();
        let p_emp = hits as f64 / samples as f64;
        // P(ω_F < 0.5) is the left limit F(0.5⁻) = 0.3.
        let q = 1.0 - 0.3f64.powi(r as i32);
        let se = (q * (1.0 - q) / samples as f64).sqrt();
        assert!((p_emp - q).abs() <= 3.0 * se, "q̂ = {p_emp} vs {q}");
    }

    #[test]
    fn white_box_probability_formula() {
        // ρ = 0.3 for the Bernoulli pair; M >= 1 makes condition (2) free, so
        // the empirical frequency is Binomial(1 - 0.7^R).
        let report = white_box_prob(&bern_f(), &bern_g(), 0.5, 1.0, 2, 1, 4000, 5).unwrap();
        assert!((report.rho_hat - 0.3).abs() < 1e-6);
        assert!((report.p_formula - (1.0 - 0.7f64.powi(2))).abs() < 1e-6);
        assert!(report.rho_hat >= report.h_measure - 1e-12);
        assert!(
            (report.p_emp - report.p_formula).abs() <= 3.0 * report.p_emp_se,
            "emp {} vs formula {}",
            report.p_emp,
            report.p_formula
        );
    }

    #[test]
    fn condition_two_dominates_at_zero_cap() {
        // M = 0 with G of unbounded support: ω_G > 0 a.s., so no box is
        // 0-white no matter how large R gets.
        let g = DistributionSpec::exponential(1.0).unwrap();
        let f = g.shift_by(0.5).unwrap();
        let report = white_box_prob(&f, &g, 0.25, 0.0, 8, 1, 1500, 21).unwrap();
        assert!(report.p_emp < 0.01, "p̂ = {}", report.p_emp);
    }

    #[test]
    fn point_mass_pair_saturates() {
        let f = DistributionSpec::point(1.0).unwrap();
        let g = DistributionSpec::point(0.0).unwrap();
        let report = white_box_prob(&f, &g, 0.5, 1.0, 2, 1, 2000, 3).unwrap();
        assert_eq!(report.p_emp, 1.0);
        assert!((report.rho_hat - 1.0).abs() < 1e-12);
        let (r, m) = choose_rm(&f, &g, 1, 2000, 3).unwrap();
        assert_eq!((r, m), (2, 1.0));
    }

    #[test]
    fn choose_rm_bernoulli_recheck() {
        let (r, m) = choose_rm(&bern_f(), &bern_g(), 1, 3000, 11).unwrap();
        assert!(r >= 2 && r % 2 == 0);
        assert!(m >= 1.0);
        // Fresh-sample verification of the entropy condition.
        let w = witness_for(&bern_f(), &bern_g()).unwrap();
        let fresh = white_box_prob(&bern_f(), &bern_g(), w.eta0, m, r, 1, 4000, 999).unwrap();
        assert!(
            dlog_condition_holds(fresh.p_emp, fresh.samples, 1),
            "(R,M)=({r},{m}) with fresh p̂={}",
            fresh.p_emp
        );
        assert!(choose_rm(&bern_f(), &bern_f(), 1, 100, 1).is_err());
    }

    #[test]
    fn animal_majority_event_d1() {
        // All marked → event holds; none marked → fails for any window ≥ n_min.
        let all = vec![true; 41];
        assert!(event_animal_majority_d1(&all, 20, 5));
        let none = vec![false; 41];
        assert!(!event_animal_majority_d1(&none, 20, 5));
        // Failure bound is a probability.
        let b = event_failure_bound(20, 0.9, 1);
        assert!((0.0..=1.0).contains(&b));
    }

    #[test]
    fn animal_majority_failure_rate_under_bound() {
        // Bernoulli(0.9)-marked boxes, N = 20: the empirical failure rate of
        // the majority event stays under the Chernoff-with-count bound.
        let (p, n_min, window) = (0.9, 20usize, 40usize);
        let samples = 600u64;
        let failures: u64 = exec::map_replicas(samples, |rep| {
            let mut rng = crate::rng::SplitMix64::new(seed_stream(1818, rep));
            let marked: Vec<bool> = (0..2 * window + 1).map(|_| rng.next_open01() < p).collect();
            u64::from(!event_animal_majority_d1(&marked, window, n_min))
        })
        .iter()
        .sum();
        let rate = failures as f64 / samples as f64;
        let se = (rate.max(1.0 / samples as f64) * (1.0 - rate) / samples as f64).sqrt();
        let bound = event_failure_bound(n_min, p, 1);
        assert!(
            rate <= bound + 3.0 * se,
            "failure rate {rate} vs bound {bound}"
        );
    }

    #[test]
    fn l_prime_event_counts_sites() {
        let mut t =
            WalkTrace::from_positions(&[vec![0], vec![1], vec![0], vec![1], vec![2]]).unwrap();
        t.hit_index = Some(4);
        // ℓ₀ = 2, ℓ₁ = 2 before the hit: two sites with 1 ≤ ℓ ≤ K for K ≥ 2.
        assert!(l_prime_event_d1(&t, 2, 0.9, 2).unwrap());
        assert!(!l_prime_event_d1(&t, 1, 0.5, 2).unwrap());
        let mut unhit = WalkTrace::from_positions(&[vec![0], vec![1]]).unwrap();
        unhit.hit_index = None;
        assert!(l_prime_event_d1(&unhit, 2, 0.5, 1).is_err());
    }

    #[test]
    fn animal_fraction_extremes() {
        let t = WalkTrace::from_positions(&[vec![0], vec![1], vec![2], vec![3]]).unwrap();
        let all: HashSet<Vec<i64>> = (-2..4).map(|v| vec![v]).collect();
        let frac = animal_white_fraction(&t, 2, &all, &[3]).unwrap();
        assert_eq!(frac.fraction, 1.0);
        assert!(frac.majority);
        let none: HashSet<Vec<i64>> = HashSet::new();
        let frac = animal_white_fraction(&t, 2, &none, &[3]).unwrap();
        assert_eq!(frac.fraction, 0.0);
        assert!(!frac.majority);
    }

    #[test]
    fn zero_field_has_no_good_boxes() {
        let mut t = WalkTrace::from_positions(&[vec![0], vec![1], vec![2], vec![3]]).unwrap();
        t.hit_index = Some(3);
        let bbox = LatticeBox::new(vec![-4], vec![7]).unwrap();
        let omega = PotentialField::constant(bbox, 0.0).unwrap();
        let stats = crossing_statistics(&t, &omega, 0.5, 2, 1, 4, &[3]).unwrap();
        assert_eq!(stats.good_in_animal, 0);
        assert_eq!(stats.crossings_completed, 0);
        assert_eq!(stats.boxes_crossed_ge_m, 0);
        assert_eq!(stats.crossings_within_lb, 0);
        assert_eq!(stats.good_fraction, 0.0);
    }

    #[test]
    fn crossing_stats_explicit_path() {
        // Path 0→3, R=2, good box {1}: one completed crossing of duration 2.
        let t = WalkTrace::from_positions(&[vec![0], vec![1], vec![2], vec![3]]).unwrap();
        let mut t = t;
        t.hit_index = Some(3);
        let bbox = LatticeBox::new(vec![-4], vec![7]).unwrap();
        // ω_F = 1 exactly on sites of box [1,3), 0 elsewhere → only box 1 is
        // 1-good (κ = 0.5).
        let values: Vec<f64> = bbox
            .sites()
            .map(|s| if s[0] == 1 || s[0] == 2 { 1.0 } else { 0.0 })
            .collect();
        let omega = PotentialField::from_values(bbox, values).unwrap();
        let stats = crossing_statistics(&t, &omega, 0.5, 2, 1, 4, &[3]).unwrap();
        assert_eq!(stats.crossings_completed, 1);
        assert_eq!(stats.boxes_crossed_ge_m, 1);
        assert_eq!(stats.crossings_within_lb, 1); // duration 2 ≤ L_B = 4
        assert_eq!(stats.good_in_animal, 1);
        assert_eq!(stats.animal_size, 2); // boxes {0, 1} before hitting 3
    }

    #[test]
    fn crossing_duration_fraction_grows_with_b() {
        let bbox = LatticeBox::new(vec![-30], vec![30]).unwrap();
        let omega =
            crate::field::realize_seeded(&bbox, &DistributionSpec::exponential(1.0).unwrap(), 42);
        let mut fractions = Vec::new();
        for b in [1u64, 2, 4] {
            let l_b = b * 4; // R = 2, d = 1 → R^{2d} = 4
            let mut within = 0usize;
            let mut total = 0usize;
            for rep in 0..300 {
                let mut rng = SplitMix64::new(seed_stream(rep, 7));
                let t = sample_walk_until(&[0], |s| s[0] == 12, 1 << 16, &mut rng).unwrap();
                if t.hit_index.is_none() {
                    continue;
                }
                let stats = crossing_statistics(&t, &omega, 0.5, 2, 1, l_b, &[12]).unwrap();
                within += stats.crossings_within_lb;
                total += stats.crossings_completed;
            }
            fractions.push(within as f64 / total.max(1) as f64);
        }
        assert!(fractions[0] <= fractions[1] && fractions[1] <= fractions[2]);
        assert!(fractions[2] > 0.9, "{fractions:?}");
    }

    #[test]
    fn quenched_gap_deterministic_pair() {
        // δ₁ vs δ₀ at n=4, margin 8: a_F/n is the constant-potential cost at
        // λ=1 (truncation decays geometrically), while the zero-potential
        // a_G/n is exactly ln(13/9)/4 on the truncated box (gambler's ruin
        // against the absorbing face at -9). Both deterministic.
        let f = DistributionSpec::point(1.0).unwrap();
        let g = DistributionSpec::point(0.0).unwrap();
        let report = coupled_gap_experiment(&f, &g, &[1], &[4], 2, GapMode::Quenched, 3).unwrap();
        let want = constant_potential_cost_d1(1.0) - (13.0f64 / 9.0).ln() / 4.0;
        let got = report.per_n[0].per_unit;
        assert!(
            (got - want).abs() < 1e-9,
            "per-unit gap {got} vs truncated prediction {want}"
        );
        assert!(report.z_positive > 10.0);
    }

    #[test]
    fn gap_requires_strict_dominance() {
        let e = DistributionSpec::exponential(1.0).unwrap();
        assert!(matches!(
            coupled_gap_experiment(&e, &e, &[1], &[4], 2, GapMode::Quenched, 3),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn bernoulli_gap_positive_and_stable() {
        let report = coupled_gap_experiment(
            &bern_f(),
            &bern_g(),
            &[1],
            &[8, 16],
            200,
            GapMode::Quenched,
            17,
        )
        .unwrap();
        assert!(report.z_positive > 2.326, "z = {}", report.z_positive);
        assert!(
            report.stability_z < 3.0,
            "stability z = {}",
            report.stability_z
        );
    }

    #[test]
    fn lockstep_coupling_exact_in_d2() {
        // The d=2 solver pair runs in lockstep, so even hair-thin coupled
        // differences stay ordered.
        let f = bern_f();
        let g = bern_g();
        let report =
            coupled_gap_experiment(&f, &g, &[1, 0], &[3], 30, GapMode::Quenched, 33).unwrap();
        assert!(report.per_n[0].gap > 0.0);
        let annealed =
            coupled_gap_experiment(&f, &g, &[1, 0], &[3], 30, GapMode::Annealed, 34).unwrap();
        assert!(annealed.per_n[0].gap > 0.0);
    }

    #[test]
    fn annealed_gap_coupled_means_ordered() {
        let report =
            coupled_gap_experiment(&bern_f(), &bern_g(), &[1], &[6], 300, GapMode::Annealed, 23)
                .unwrap();
        assert!(report.per_n[0].gap > 0.0);
    }

    #[test]
    fn criterion_decision_tree() {
        let zero = CostEstimate::deterministic(0.0);
        // F(0) = 0 → strict gap regardless of estimates.
        let f = DistributionSpec::point(1.0).unwrap();
        let g = DistributionSpec::point(0.0).unwrap();
        let bf = CostEstimate::deterministic(1.0);
        let rep = criterion_d1(&f, &g, &bf, &zero).unwrap();
        assert_eq!(rep.regime, Regime::StrictGap);
        assert!(rep.key_bound_ok);

        // F(0) < G(0) → strict gap.
        let rep = criterion_d1(
            &bern_f(),
            &bern_g(),
            &CostEstimate::deterministic(0.3),
            &CostEstimate::deterministic(0.2),
        )
        .unwrap();
        assert_eq!(rep.regime, Regime::StrictGap);

        // Equal atoms at zero with β_G clearly positive → F(0) above the
        // threshold interval → coincidence prediction.
        let f2 = DistributionSpec::atomic(vec![(0.0, 0.5), (2.0, 0.5)]).unwrap();
        let g2 = DistributionSpec::atomic(vec![(0.0, 0.5), (1.0, 0.5)]).unwrap();
        let bg = CostEstimate {
            value: 1.2,
            std_error: 0.01,
            n_samples: 100,
            truncation_diag: None,
            capped_fraction: 0.0,
            infinite: false,
        };
        let bf = CostEstimate {
            value: 0.65,
            std_error: 0.01,
            n_samples: 100,
            truncation_diag: None,
            capped_fraction: 0.0,
            infinite: false,
        };
        let rep = criterion_d1(&f2, &g2, &bf, &bg).unwrap();
        assert_eq!(rep.regime, Regime::Coincide);
        assert!((rep.predicted_common.unwrap() - LN2).abs() < 1e-12);

        // Never Coincide when F(0) = 0 or F(0) < G(0) (checked above); and
        // an overlapping interval is Undetermined.
        let bg_wide = CostEstimate {
            value: 0.7,
            std_error: 0.2,
            n_samples: 10,
            truncation_diag: None,
            capped_fraction: 0.0,
            infinite: false,
        };
        let rep = criterion_d1(&f2, &g2, &bf, &bg_wide).unwrap();
        assert_eq!(rep.regime, Regime::Undetermined);
    }

    #[test]
    fn criterion_bernoulli_vs_zero() {
        // G = δ₀ (β_G = 0), F = half/half: F(0) = 0.5 < e⁰ = 1 → strict gap.
        let f = DistributionSpec::atomic(vec![(0.0, 0.5), (1.0, 0.5)]).unwrap();
        let g = DistributionSpec::point(0.0).unwrap();
        let seq = beta_upper_sequence(
            &f,
            &[1],
            &[4, 8],
            BetaEstimator::PotentialMc { samples: 300 },
            41,
        )
        .unwrap();
        let bf = seq.beta().cost.clone();
        let bg = CostEstimate::deterministic(0.0);
        let rep = criterion_d1(&f, &g, &bf, &bg).unwrap();
        assert_eq!(rep.regime, Regime::StrictGap);
        assert!(rep.key_bound_ok, "β̂_F = {} vs ln 2", bf.value);
        assert!(bf.value > 3.0 * bf.std_error);
    }

    #[test]
    fn gamblers_ruin_identity_and_mc() {
        assert_eq!(gamblers_ruin(1, 1).unwrap(), 0.5);
        assert_eq!(gamblers_ruin(3, 1).unwrap(), 0.25);
        let (freq, se) = gamblers_ruin_mc(3, 1, 20_000, 5).unwrap();
        assert!((freq - 0.25).abs() < 3.0 * se, "freq {freq}");
    }

    #[test]
    fn exponential_fit_recovers_synthetic_decay() {
        let (c1, c2) = (0.8, 0.35);
        let points: Vec<(f64, f64)> = (4..20)
            .map(|n| (n as f64, c1 * (-c2 * n as f64).exp()))
            .collect();
        let (f1, f2) = fit_exponential_decay(&points).unwrap();
        assert!((f1 - c1).abs() < 1e-9 && (f2 - c2).abs() < 1e-9);
        assert!(fit_exponential_decay(&[(1.0, 0.0), (2.0, 0.0)]).is_none());
    }

    #[test]
    fn choose_b_covers_duration_quantile() {
        let durations = vec![1usize, 2, 3, 4, 4, 4, 5, 9, 30];
        // A = 2 → need ≥ 3/4 within; R=2, d=1 → L_B = 4B: B=2 gives 8/9.
        assert_eq!(choose_b(&durations, 2, 1, 2, 64), Some(2));
        assert_eq!(choose_b(&[], 2, 1, 6, 64), Some(1));
        assert_eq!(choose_b(&[10_000], 2, 1, 6, 4), None);
    }

    #[test]
    fn threshold_scan_synthetic() {
        // Known crossing at x = 0.6.
        let rows: Vec<RateScanPoint> = (1..10)
            .map(|i| {
                let x = i as f64 / 10.0;
                let diff = if x > 0.6 { 0.05 * (x - 0.6) } else { 0.0 };
                RateScanPoint {
                    x,
                    j_f: 0.1 + diff,
                    j_g: 0.1,
                    se: 1e-4,
                }
            })
            .collect();
        let rep = threshold_scan(rows, true);
        assert!(rep.monotone_ok);
        assert!((rep.v0.unwrap() - 0.6).abs() < 0.1 + 1e-12);

        // All differences significant → unresolved, v₀ ≈ 0 reported.
        let rows: Vec<RateScanPoint> = (1..5)
            .map(|i| RateScanPoint {
                x: i as f64 / 5.0,
                j_f: 0.5,
                j_g: 0.1,
                se: 1e-4,
            })
            .collect();
        let rep = threshold_scan(rows, true);
        assert!(!rep.resolved);
        assert!(!rep.warnings.is_empty());
    }
}
