//! The annealed travel cost `b(x,y) = -log E[e(x,y,ω)]`, estimated two
//! independent ways, and the monotone upper-bound sequence for the annealed
//! exponent `β`.
//!
//! The walk estimator uses the local-time factorization
//! `E[e(0,y,ω)] = E⁰[Π_z L_φ(ℓ_z(H(y))) 1{H(y) < ∞}]`, which lets one trace
//! be reused across many potential laws; the potential estimator averages
//! solved two-point functions over realizations of ω. Their agreement is a
//! standing regression check.

use std::collections::HashMap;

use crate::dist::DistributionSpec;
use crate::error::{Error, Result};
use crate::exec;
use crate::field::{realize_seeded, LatticeBox};
use crate::quenched::{solve_e, TruncatedDomain};
use crate::rng::{seed_stream, SplitMix64};
use crate::stats::{CostEstimate, OnlineStats};
use crate::walk::{local_times, norm1, sample_walk_until};

/// Which Monte Carlo route produced an annealed estimate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EstimatorKind {
    /// Average of local-time Laplace products over walk traces.
    WalkMc,
    /// Average of solved two-point functions over potential samples.
    PotentialMc,
}

impl EstimatorKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            EstimatorKind::WalkMc => "walk_mc",
            EstimatorKind::PotentialMc => "potential_mc",
        }
    }
}

/// An annealed cost estimate with its estimator pedigree.
#[derive(Debug, Clone, PartialEq)]
pub struct AnnealedEstimate {
    pub cost: CostEstimate,
    pub estimator: EstimatorKind,
    pub cap: Option<u64>,
    pub margin: Option<i64>,
}

/// Default walk cap: the hitting-time scale `64 n²` for distance `n`.
pub fn default_walk_cap(y: &[i64]) -> u64 {
    let n = norm1(y).max(1) as u64;
    64 * n * n
}

/// Walk-route estimate of `b(0, y)`.
///
/// Capped traces contribute 0, which undershoots `E[e]` by at most
/// `P⁰(T < H(y) < ∞)` since every weight is ≤ 1; the capped fraction is
/// reported so that bias can be judged.
pub fn b_walk_mc(
    phi: &DistributionSpec,
    y: &[i64],
    samples: u64,
    cap: u64,
    seed: u64,
) -> Result<AnnealedEstimate> {
    let ests = b_walk_mc_multi(std::slice::from_ref(phi), y, samples, cap, seed)?;
    Ok(ests.into_iter().next().unwrap())
}

/// Walk-route estimates for several potential laws sharing one set of traces.
///
/// The local-time field of a trace is φ-independent, so the factorized weight
/// can be re-priced per spec; shared traces act as control variates when the
/// resulting estimates are compared.
pub fn b_walk_mc_multi(
    phis: &[DistributionSpec],
    y: &[i64],
    samples: u64,
    cap: u64,
    seed: u64,
) -> Result<Vec<AnnealedEstimate>> {
    if norm1(y) == 0 {
        return Err(Error::Domain("target y must differ from the origin".into()));
    }
    if cap < norm1(y) as u64 {
        return Err(Error::Domain(format!(
            "cap {cap} below the ℓ¹ distance {}",
            norm1(y)
        )));
    }
    if samples == 0 {
        return Err(Error::Domain("need at least one sample".into()));
    }
    let d = y.len();
    let origin = vec![0i64; d];
    let target = y.to_vec();

    // Per replica: (capped, local-time count multiset).
    let trace_data: Vec<(bool, Vec<(u64, u64)>)> = exec::map_replicas(samples, |r| {
        let mut rng = SplitMix64::new(seed_stream(seed, r));
        let trace = sample_walk_until(&origin, |s| s == target.as_slice(), cap, &mut rng)
            .expect("cap >= 1");
        match trace.hit_index {
            Some(hit) => {
                let lt = local_times(&trace, hit).expect("hit within trace");
                // Collapse to count multiplicities: Π_z L(ℓ_z) = Π_c L(c)^{m_c}.
                let mut mult: HashMap<u64, u64> = HashMap::new();
                for &c in lt.counts.values() {
                    *mult.entry(c).or_insert(0) += 1;
                }
                let mut v: Vec<(u64, u64)> = mult.into_iter().collect();
                v.sort_unstable();
                (false, v)
            }
            None => (true, Vec::new()),
        }
    });

    let capped = trace_data.iter().filter(|(c, _)| *c).count() as f64 / samples as f64;
    let mut out = Vec::with_capacity(phis.len());
    for phi in phis {
        let mut lap_cache: HashMap<u64, f64> = HashMap::new();
        let mut stats = OnlineStats::new();
        for (is_capped, mult) in &trace_data {
            if *is_capped {
                stats.push(0.0);
                continue;
            }
            let mut log_weight = 0.0;
            for &(count, m) in mult {
                let lap = *lap_cache
                    .entry(count)
                    .or_insert_with(|| phi.laplace_transform(count as f64));
                log_weight += m as f64 * lap.ln();
            }
            stats.push(log_weight.exp());
        }
        let mut cost = CostEstimate::neg_log_of_mean(&stats)?;
        cost.capped_fraction = capped;
        out.push(AnnealedEstimate {
            cost,
            estimator: EstimatorKind::WalkMc,
            cap: Some(cap),
            margin: None,
        });
    }
    Ok(out)
}

/// Potential-route estimate of `b(0, y)`: `-log` of the sample mean of solved
/// two-point functions, with the margin-doubling diagnostic carried through.
pub fn b_potential_mc(
    phi: &DistributionSpec,
    y: &[i64],
    samples: u64,
    margin: i64,
    seed: u64,
) -> Result<AnnealedEstimate> {
    if norm1(y) == 0 {
        return Err(Error::Domain("target y must differ from the origin".into()));
    }
    if samples == 0 {
        return Err(Error::Domain("need at least one sample".into()));
    }
    let d = y.len();
    let origin = vec![0i64; d];
    let domain = TruncatedDomain::from_endpoints(&origin, y, margin)?;
    let wide = domain.doubled(&origin, y)?;
    let wide_box = LatticeBox::hull(&origin, y, 2 * margin)?;

    let values: Vec<Result<(f64, f64)>> = exec::map_replicas(samples, |r| {
        let omega = realize_seeded(&wide_box, phi, seed_stream(seed, r));
        let e_narrow = solve_e(&omega, y, &domain)?.at(&origin);
        let e_wide = solve_e(&omega, y, &wide)?.at(&origin);
        Ok((e_narrow, e_wide))
    });
    let mut narrow = OnlineStats::new();
    let mut wide_stats = OnlineStats::new();
    for v in values {
        let (en, ew) = v?;
        narrow.push(en);
        wide_stats.push(ew);
    }
    let mut cost = CostEstimate::neg_log_of_mean(&wide_stats)?;
    let b_narrow = if narrow.mean() > 0.0 {
        -narrow.mean().ln()
    } else {
        f64::INFINITY
    };
    cost.truncation_diag = Some((b_narrow, cost.value));
    Ok(AnnealedEstimate {
        cost,
        estimator: EstimatorKind::PotentialMc,
        cap: None,
        margin: Some(margin),
    })
}

/// Estimator configuration for β sequences and curve points.
#[derive(Debug, Clone, Copy)]
pub enum BetaEstimator {
    WalkMc { samples: u64 },
    PotentialMc { samples: u64 },
}

/// The monotone upper-bound sequence `b(0, nx)/n` and its running minimum.
///
/// `β(x)` is the infimum over n, so every finite-n entry is a rigorous upper
/// bound up to statistical error; no extrapolation is done beyond the
/// running minimum over the provided list.
#[derive(Debug, Clone)]
pub struct BetaSequence {
    pub per_n: Vec<(i64, AnnealedEstimate)>,
    /// Index into `per_n` of the running minimum of `value/n`.
    pub argmin: usize,
}

impl BetaSequence {
    /// The β estimate: the running minimum entry, per unit n.
    pub fn beta(&self) -> &AnnealedEstimate {
        &self.per_n[self.argmin].1
    }
}

pub fn beta_upper_sequence(
    phi: &DistributionSpec,
    x: &[i64],
    n_list: &[i64],
    estimator: BetaEstimator,
    seed: u64,
) -> Result<BetaSequence> {
    if norm1(x) == 0 {
        return Err(Error::Domain("direction x must be nonzero".into()));
    }
    let mut per_n = Vec::with_capacity(n_list.len());
    for (i, &n) in n_list.iter().enumerate() {
        if n < 1 {
            return Err(Error::Domain(format!("n must be >= 1, got {n}")));
        }
        let target: Vec<i64> = x.iter().map(|c| c * n).collect();
        let sub_seed = seed_stream(seed, i as u64);
        let mut est = match estimator {
            BetaEstimator::WalkMc { samples } => {
                b_walk_mc(phi, &target, samples, default_walk_cap(&target), sub_seed)?
            }
            BetaEstimator::PotentialMc { samples } => {
                b_potential_mc(phi, &target, samples, 2 * norm1(&target), sub_seed)?
            }
        };
        // Normalize to per-unit-n.
        est.cost.value /= n as f64;
        est.cost.std_error /= n as f64;
        if let Some((a, b)) = est.cost.truncation_diag {
            est.cost.truncation_diag = Some((a / n as f64, b / n as f64));
        }
        per_n.push((n, est));
    }
    let mut argmin = 0usize;
    for (i, (_, est)) in per_n.iter().enumerate() {
        if est.cost.value < per_n[argmin].1.cost.value {
            argmin = i;
        }
    }
    Ok(BetaSequence { per_n, argmin })
}

/// A priori sandwich for the annealed exponent per unit ℓ¹ distance:
/// `-log E[e^{-ω}] ≤ β(x)/‖x‖₁ ≤ log(2d) - log E[e^{-ω}]`.
pub fn sandwich_bounds_annealed(phi: &DistributionSpec, d: usize) -> (f64, f64) {
    let neg_log_l1 = -phi.laplace_transform(1.0).ln();
    (neg_log_l1, ((2 * d) as f64).ln() + neg_log_l1)
}
