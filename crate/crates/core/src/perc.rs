//! Site percolation of the level sets `η_M(z) = 1{ω_φ(z) ≤ M}`: cluster
//! labeling, chemical distance through open sites, projection onto the
//! largest cluster, and the per-distance estimator of the chemical-distance
//! norm used to calibrate the high-λ slope of the quenched exponent.

use std::collections::VecDeque;

use crate::dist::DistributionSpec;
use crate::error::{Error, Result};
use crate::exec;
use crate::field::{realize_seeded, LatticeBox, PotentialField};
use crate::rng::seed_stream;
use crate::stats::OnlineStats;
use crate::walk::norm1;

/// An open/closed configuration on a box with its threshold.
#[derive(Debug, Clone)]
pub struct PercolationConfig {
    pub domain: LatticeBox,
    pub open: Vec<bool>,
    pub threshold: f64,
}

impl PercolationConfig {
    /// `η_M(z) = 1{ω(z) ≤ M}` exactly from a potential field.
    pub fn from_potential(omega: &PotentialField, m: f64) -> Self {
        PercolationConfig {
            domain: omega.domain.clone(),
            open: omega.values.iter().map(|&v| v <= m).collect(),
            threshold: m,
        }
    }

    pub fn all_open(domain: LatticeBox) -> Self {
        let n = domain.len();
        PercolationConfig {
            domain,
            open: vec![true; n],
            threshold: f64::INFINITY,
        }
    }

    pub fn is_open(&self, site: &[i64]) -> bool {
        self.domain.index(site).is_some_and(|i| self.open[i])
    }
}

/// Connected components of the open set.
#[derive(Debug, Clone)]
pub struct Clusters {
    /// Per-site cluster id, `usize::MAX` for closed sites.
    pub label: Vec<usize>,
    /// Cluster sizes by id.
    pub sizes: Vec<usize>,
    /// Id of the largest cluster (ties broken by the cluster holding the
    /// lexicographically smallest site), `None` when nothing is open.
    pub largest: Option<usize>,
}

/// Label the open components by breadth-first traversal.
pub fn clusters(config: &PercolationConfig) -> Clusters {
    let n = config.domain.len();
    let d = config.domain.dim();
    let mut label = vec![usize::MAX; n];
    let mut sizes = Vec::new();
    // Flat index order is lexicographic in the coordinates, so the first
    // unvisited open site of each component is its lexicographic minimum,
    // and components are discovered in lexicographic order of those minima.
    for start in 0..n {
        if !config.open[start] || label[start] != usize::MAX {
            continue;
        }
        let id = sizes.len();
        let mut size = 0usize;
        let mut queue = VecDeque::new();
        queue.push_back(start);
        label[start] = id;
        while let Some(i) = queue.pop_front() {
            size += 1;
            let site = config.domain.site(i);
            for axis in 0..d {
                for sign in [-1i64, 1] {
                    let mut nb = site.clone();
                    nb[axis] += sign;
                    if let Some(j) = config.domain.index(&nb) {
                        if config.open[j] && label[j] == usize::MAX {
                            label[j] = id;
                            queue.push_back(j);
                        }
                    }
                }
            }
        }
        sizes.push(size);
    }
    let largest = (0..sizes.len()).max_by(|&a, &b| {
        sizes[a]
            .cmp(&sizes[b])
            // On ties prefer the smaller id: earlier lexicographic minimum.
            .then(b.cmp(&a))
    });
    Clusters {
        label,
        sizes,
        largest,
    }
}

/// Chemical distance `d_M(u, v)`: minimal open-path length, or `None` when
/// the endpoints lie in different clusters (or either is closed).
pub fn chemical_distance(config: &PercolationConfig, u: &[i64], v: &[i64]) -> Option<u64> {
    let start = config.domain.index(u)?;
    let goal = config.domain.index(v)?;
    if !config.open[start] || !config.open[goal] {
        return None;
    }
    if start == goal {
        return Some(0);
    }
    let d = config.domain.dim();
    let mut dist = vec![u64::MAX; config.domain.len()];
    dist[start] = 0;
    let mut queue = VecDeque::new();
    queue.push_back(start);
    while let Some(i) = queue.pop_front() {
        let site = config.domain.site(i);
        for axis in 0..d {
            for sign in [-1i64, 1] {
                let mut nb = site.clone();
                nb[axis] += sign;
                if let Some(j) = config.domain.index(&nb) {
                    if config.open[j] && dist[j] == u64::MAX {
                        dist[j] = dist[i] + 1;
                        if j == goal {
                            return Some(dist[j]);
                        }
                        queue.push_back(j);
                    }
                }
            }
        }
    }
    None
}

/// ℓ¹-closest site of the largest cluster, ties broken lexicographically.
pub fn project_to_giant(config: &PercolationConfig, cl: &Clusters, z: &[i64]) -> Result<Vec<i64>> {
    let giant = cl
        .largest
        .ok_or_else(|| Error::Domain("no open site to project onto".into()))?;
    let mut best: Option<(i64, Vec<i64>)> = None;
    for i in 0..config.domain.len() {
        if cl.label[i] != giant {
            continue;
        }
        let site = config.domain.site(i);
        let dist: i64 = site.iter().zip(z).map(|(a, b)| (a - b).abs()).sum();
        let better = match &best {
            None => true,
            // Flat order is lexicographic, so on distance ties the first
            // site seen is the lexicographically smallest.
            Some((bd, _)) => dist < *bd,
        };
        if better {
            best = Some((dist, site));
        }
    }
    Ok(best.expect("largest cluster is nonempty").1)
}

/// One (M, n) entry of a chemical-distance norm estimate.
#[derive(Debug, Clone)]
pub struct MuEstimate {
    pub m: f64,
    pub n: i64,
    pub mu_hat: f64,
    pub stderr: f64,
    pub unreachable_fraction: f64,
    pub samples: u64,
}

/// Estimate `μ_M(y)` as the mean of `d_M(0̃, ñy)/n` using the largest in-box
/// cluster as the infinite-cluster proxy.
///
/// Guarded by `φ(M) ≥ supercrit_guard` (the estimator has no meaning in the
/// subcritical phase); unreachable pairs are skipped and their fraction
/// reported, with a warning error if they exceed half the samples.
#[allow(clippy::too_many_arguments)]
pub fn mu_estimate(
    phi: &DistributionSpec,
    m: f64,
    y: &[i64],
    n_list: &[i64],
    samples: u64,
    margin_factor: i64,
    supercrit_guard: f64,
    seed: u64,
) -> Result<Vec<MuEstimate>> {
    let d = y.len();
    if d < 2 {
        return Err(Error::Domain(
            "chemical-distance norms are estimated in d ≥ 2".into(),
        ));
    }
    if norm1(y) == 0 {
        return Err(Error::Domain("direction y must be nonzero".into()));
    }
    if phi.cdf(m) < supercrit_guard {
        return Err(Error::ModelAssumption(format!(
            "φ(M) = {} below the supercriticality guard {supercrit_guard}",
            phi.cdf(m)
        )));
    }
    let origin = vec![0i64; d];
    let mut out = Vec::with_capacity(n_list.len());
    for (ni, &n) in n_list.iter().enumerate() {
        let target: Vec<i64> = y.iter().map(|c| c * n).collect();
        let bbox = LatticeBox::hull(&origin, &target, margin_factor * n)?;
        let n_seed = seed_stream(seed, ni as u64);
        let dists: Vec<Option<f64>> = exec::map_replicas(samples, |rep| {
            let omega = realize_seeded(&bbox, phi, seed_stream(n_seed, rep));
            let config = PercolationConfig::from_potential(&omega, m);
            let cl = clusters(&config);
            cl.largest?;
            let u = project_to_giant(&config, &cl, &origin).ok()?;
            let v = project_to_giant(&config, &cl, &target).ok()?;
            chemical_distance(&config, &u, &v).map(|dist| dist as f64 / n as f64)
        });
        let mut stats = OnlineStats::new();
        let mut unreachable = 0u64;
        for dv in dists {
            match dv {
                Some(v) => stats.push(v),
                None => unreachable += 1,
            }
        }
        let unreachable_fraction = unreachable as f64 / samples as f64;
        if unreachable_fraction > 0.5 {
            return Err(Error::ModelAssumption(format!(
                "unreachable fraction {unreachable_fraction} exceeds 50%: below the \
                 supercritical regime the largest-cluster proxy is meaningless"
            )));
        }
        out.push(MuEstimate {
            m,
            n,
            mu_hat: stats.mean(),
            stderr: stats.std_error(),
            unreachable_fraction,
            samples,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::sample_uniform_field;

    fn open_from(domain: LatticeBox, open_sites: &[Vec<i64>]) -> PercolationConfig {
        let mut open = vec![false; domain.len()];
        for s in open_sites {
            open[domain.index(s).unwrap()] = true;
        }
        PercolationConfig {
            domain,
            open,
            threshold: 0.0,
        }
    }

    #[test]
    fn all_open_single_cluster() {
        let b = LatticeBox::new(vec![0, 0], vec![3, 3]).unwrap();
        let config = PercolationConfig::all_open(b.clone());
        let cl = clusters(&config);
        assert_eq!(cl.sizes, vec![16]);
        assert_eq!(cl.largest, Some(0));
        assert_eq!(chemical_distance(&config, &[0, 0], &[3, 0]), Some(3));
    }

    #[test]
    fn alternating_sites_are_singletons() {
        let b = LatticeBox::new(vec![0], vec![9]).unwrap();
        let sites: Vec<Vec<i64>> = (0..10).filter(|i| i % 2 == 0).map(|i| vec![i]).collect();
        let config = open_from(b, &sites);
        let cl = clusters(&config);
        assert_eq!(cl.sizes.len(), 5);
        assert!(cl.sizes.iter().all(|&s| s == 1));
        // A closed site between two open ones is unreachable.
        assert_eq!(chemical_distance(&config, &[0], &[2]), None);
    }

    #[test]
    fn bfs_matches_flood_fill_oracle() {
        // Random 8×8 configs vs an independent recursive flood fill.
        for seed in 0..20 {
            let b = LatticeBox::new(vec![0, 0], vec![7, 7]).unwrap();
            let u = sample_uniform_field(&b, seed);
            let open: Vec<bool> = u.values.iter().map(|&v| v < 0.55).collect();
            let config = PercolationConfig {
                domain: b.clone(),
                open: open.clone(),
                threshold: 0.55,
            };
            let cl = clusters(&config);

            fn flood(b: &LatticeBox, open: &[bool], mark: &mut [usize], i: usize, id: usize) {
                mark[i] = id;
                let site = b.site(i);
                for axis in 0..2 {
                    for sign in [-1i64, 1] {
                        let mut nb = site.clone();
                        nb[axis] += sign;
                        if let Some(j) = b.index(&nb) {
                            if open[j] && mark[j] == usize::MAX {
                                flood(b, open, mark, j, id);
                            }
                        }
                    }
                }
            }
            let mut mark = vec![usize::MAX; b.len()];
            let mut next = 0usize;
            for i in 0..b.len() {
                if open[i] && mark[i] == usize::MAX {
                    flood(&b, &open, &mut mark, i, next);
                    next += 1;
                }
            }
            assert_eq!(cl.label, mark, "seed {seed}");
        }
    }

    #[test]
    fn chemical_distance_detour() {
        // 5×5 with a closed wall forcing a detour: hand-computed length.
        let b = LatticeBox::new(vec![0, 0], vec![4, 4]).unwrap();
        let mut sites = Vec::new();
        for x in 0..5i64 {
            for y in 0..5i64 {
                // Wall at x = 2 except the top row y = 4.
                if x == 2 && y != 4 {
                    continue;
                }
                sites.push(vec![x, y]);
            }
        }
        let config = open_from(b, &sites);
        // (0,0) → (4,0): up to y=4 (4 steps), across (4), down (4) = 12.
        assert_eq!(chemical_distance(&config, &[0, 0], &[4, 0]), Some(12));
        // d_M is a metric on the cluster: symmetry and triangle inequality.
        let d1 = chemical_distance(&config, &[0, 0], &[2, 4]).unwrap();
        let d2 = chemical_distance(&config, &[2, 4], &[4, 0]).unwrap();
        let d12 = chemical_distance(&config, &[0, 0], &[4, 0]).unwrap();
        assert_eq!(chemical_distance(&config, &[4, 0], &[0, 0]), Some(d12));
        assert!(d12 <= d1 + d2);
    }

    #[test]
    fn projection_rules() {
        let b = LatticeBox::new(vec![0], vec![9]).unwrap();
        // Largest cluster {2,3}; singleton {7} is smaller... make {7} size 1.
        let config = open_from(b, &[vec![2], vec![3], vec![7]]);
        let cl = clusters(&config);
        assert_eq!(project_to_giant(&config, &cl, &[2]).unwrap(), vec![2]);
        assert_eq!(project_to_giant(&config, &cl, &[0]).unwrap(), vec![2]);
        // Tie at distance 1 on both sides → lexicographically smaller site.
        let b2 = LatticeBox::new(vec![0], vec![9]).unwrap();
        let config = open_from(b2, &[vec![4], vec![5], vec![6]]);
        let cl = clusters(&config);
        assert_eq!(project_to_giant(&config, &cl, &[5]).unwrap(), vec![5]);
        let b3 = LatticeBox::new(vec![0], vec![9]).unwrap();
        let config = open_from(b3, &[vec![3], vec![4], vec![6], vec![7]]);
        let cl = clusters(&config);
        // {3,4} and {6,7} tie in size; the one with the smaller lexicographic
        // site wins, so projecting 5 gives 4.
        assert_eq!(project_to_giant(&config, &cl, &[5]).unwrap(), vec![4]);
        // Empty open set errors.
        let b4 = LatticeBox::new(vec![0], vec![3]).unwrap();
        let config = open_from(b4, &[]);
        let cl = clusters(&config);
        assert!(project_to_giant(&config, &cl, &[0]).is_err());
    }

    #[test]
    fn chemical_distance_dominates_l1_and_all_open_is_exact() {
        let b = LatticeBox::new(vec![-2, -2], vec![8, 4]).unwrap();
        let config = PercolationConfig::all_open(b);
        for target in [[6i64, 0], [3, 2], [5, -2]] {
            let d = chemical_distance(&config, &[0, 0], &target).unwrap();
            assert_eq!(d as i64, norm1(&target));
        }
    }

    #[test]
    fn monotone_in_threshold_exact() {
        // Raising M opens sites and never increases d_M between endpoints
        // already connected at the lower threshold.
        let b = LatticeBox::new(vec![0, 0], vec![11, 11]).unwrap();
        let phi = DistributionSpec::exponential(1.0).unwrap();
        let mut compared = 0;
        for seed in 0..60 {
            let omega = realize_seeded(&b, &phi, seed);
            let lo = PercolationConfig::from_potential(&omega, 2.0);
            let hi = PercolationConfig::from_potential(&omega, 3.0);
            for (a, o) in lo.open.iter().zip(&hi.open) {
                assert!(!a || *o, "coupling: open at M=2 must stay open at M=3");
            }
            if let Some(d_lo) = chemical_distance(&lo, &[0, 0], &[11, 11]) {
                let d_hi = chemical_distance(&hi, &[0, 0], &[11, 11])
                    .expect("still connected after opening sites");
                assert!(d_hi <= d_lo);
                compared += 1;
            }
        }
        assert!(compared > 0, "no connected sample to compare");
    }

    #[test]
    fn mu_estimates_trend() {
        let phi = DistributionSpec::exponential(1.0).unwrap();
        // φ(M) = 0.95 and 0.99.
        let m1 = -(0.05f64).ln();
        let m2 = -(0.01f64).ln();
        let e1 = mu_estimate(&phi, m1, &[1, 0], &[8], 30, 2, 0.75, 5).unwrap();
        let e2 = mu_estimate(&phi, m2, &[1, 0], &[8], 30, 2, 0.75, 5).unwrap();
        assert!(e1[0].mu_hat >= 1.0);
        assert!(e2[0].mu_hat >= 1.0);
        assert!(e2[0].mu_hat <= e1[0].mu_hat + 3.0 * e1[0].stderr.hypot(e2[0].stderr));
        assert!(e1[0].unreachable_fraction < 0.1);
        // Guard rejects clearly subcritical thresholds.
        assert!(mu_estimate(&phi, 0.1, &[1, 0], &[4], 5, 2, 0.75, 1).is_err());
        assert!(mu_estimate(&phi, m1, &[1], &[4], 5, 2, 0.75, 1).is_err());
    }

    #[test]
    fn chain_bound_links_cost_to_chemical_distance() {
        // a(0, ny, ω+λ) ≤ d_M(0̃, ñy)(λ + log 2d + M) when 0 and ny are both
        // in the largest cluster: the walk can follow the open geodesic.
        use crate::quenched::{solve_e, TruncatedDomain};
        let phi = DistributionSpec::exponential(1.0).unwrap();
        let m = -(0.05f64).ln(); // φ(M) = 0.95
        let lambda = 0.5;
        let y = [6i64, 0];
        let origin = [0i64, 0];
        let mut checked = 0;
        for seed in 0..12 {
            let bbox = LatticeBox::hull(&origin, &y, 8).unwrap();
            let omega = realize_seeded(&bbox, &phi, seed);
            let config = PercolationConfig::from_potential(&omega, m);
            let cl = clusters(&config);
            let Some(giant) = cl.largest else { continue };
            let (oi, yi) = (
                config.domain.index(&origin).unwrap(),
                config.domain.index(&y).unwrap(),
            );
            if cl.label[oi] != giant || cl.label[yi] != giant {
                continue;
            }
            let dm = chemical_distance(&config, &origin, &y).unwrap();
            let shifted_values: Vec<f64> = omega.values.iter().map(|v| v + lambda).collect();
            let shifted =
                PotentialField::from_values(omega.domain.clone(), shifted_values).unwrap();
            let dom = TruncatedDomain {
                bbox: bbox.clone(),
                margin: 8,
            };
            let a = solve_e(&shifted, &y, &dom).unwrap().neg_log_at(&origin);
            let bound = dm as f64 * (lambda + 4.0f64.ln() + m);
            assert!(a <= bound + 1e-6, "a = {a} bound = {bound}");
            checked += 1;
        }
        assert!(checked > 0);
    }
}
