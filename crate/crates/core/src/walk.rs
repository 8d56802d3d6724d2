//! Lattice geometry and the simple random walk: R-box decomposition, walk
//! sampling with hitting times, local times, marked-box crossings, path
//! animals and exact lattice-animal enumeration.

use std::collections::{HashMap, HashSet};

use crate::error::{Error, Result};
use crate::rng::SplitMix64;

/// ℓ¹ norm of a lattice vector.
pub fn norm1(x: &[i64]) -> i64 {
    x.iter().map(|c| c.abs()).sum()
}

/// ℓ∞ norm of a lattice vector.
pub fn norm_inf(x: &[i64]) -> i64 {
    x.iter().map(|c| c.abs()).max().unwrap_or(0)
}

/// Index `v` of the R-box `Λ_R(v) = Rv + [-R/2, R/2)^d` containing `z`.
///
/// The boxes partition `Z^d`; `R` must be even.
pub fn box_index(z: &[i64], r: i64) -> Result<Vec<i64>> {
    if r < 2 || r % 2 != 0 {
        return Err(Error::Domain(format!("R must be even and >= 2, got {r}")));
    }
    Ok(z.iter().map(|&c| (c + r / 2).div_euclid(r)).collect())
}

/// A sampled nearest-neighbor path.
///
/// Positions are stored flattened (`d` coordinates per step); `hit_index` is
/// the first index at which the target set was entered, `capped` is set when
/// the step budget ran out first.
#[derive(Debug, Clone)]
pub struct WalkTrace {
    d: usize,
    coords: Vec<i64>,
    pub hit_index: Option<usize>,
    pub capped: bool,
}

impl WalkTrace {
    /// Build a trace from explicit positions (tests and replays).
    pub fn from_positions(positions: &[Vec<i64>]) -> Result<Self> {
        if positions.is_empty() {
            return Err(Error::Domain("trace needs at least the start".into()));
        }
        let d = positions[0].len();
        for w in positions.windows(2) {
            let dist: i64 = w[0].iter().zip(&w[1]).map(|(a, b)| (a - b).abs()).sum();
            if dist != 1 {
                return Err(Error::Domain(
                    "consecutive sites must be ℓ¹-adjacent".into(),
                ));
            }
        }
        Ok(WalkTrace {
            d,
            coords: positions.iter().flatten().copied().collect(),
            hit_index: None,
            capped: false,
        })
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    /// Number of positions, including the start.
    pub fn len(&self) -> usize {
        self.coords.len() / self.d
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn position(&self, k: usize) -> &[i64] {
        &self.coords[k * self.d..(k + 1) * self.d]
    }

    pub fn start(&self) -> &[i64] {
        self.position(0)
    }

    pub fn positions(&self) -> impl Iterator<Item = &[i64]> {
        self.coords.chunks_exact(self.d)
    }

    /// Debug dump: one `k x₁ … x_d` line per position. Traces are not
    /// persisted by default; this is for ad-hoc inspection only.
    pub fn debug_dump(&self) -> String {
        let mut out = String::new();
        for (k, pos) in self.positions().enumerate() {
            out.push_str(&k.to_string());
            for c in pos {
                out.push(' ');
                out.push_str(&c.to_string());
            }
            out.push('\n');
        }
        out
    }
}

/// Sample the walk from `start` until it enters the target set or the step
/// budget `cap` is exhausted. `H(A) = inf{k ≥ 0 : S_k ∈ A}`, so a start
/// inside the target yields a trace of length 0 with `hit_index = 0`.
pub fn sample_walk_until<T>(
    start: &[i64],
    is_target: T,
    cap: u64,
    rng: &mut SplitMix64,
) -> Result<WalkTrace>
where
    T: Fn(&[i64]) -> bool,
{
    if cap < 1 {
        return Err(Error::Domain("step budget must be >= 1".into()));
    }
    let d = start.len();
    let mut coords: Vec<i64> = Vec::with_capacity(64 * d);
    coords.extend_from_slice(start);
    let mut pos = start.to_vec();
    if is_target(&pos) {
        return Ok(WalkTrace {
            d,
            coords,
            hit_index: Some(0),
            capped: false,
        });
    }
    for k in 1..=cap {
        let dir = rng.next_below(2 * d);
        let axis = dir / 2;
        let sign = if dir.is_multiple_of(2) { 1 } else { -1 };
        pos[axis] += sign;
        coords.extend_from_slice(&pos);
        if is_target(&pos) {
            return Ok(WalkTrace {
                d,
                coords,
                hit_index: Some(k as usize),
                capped: false,
            });
        }
    }
    Ok(WalkTrace {
        d,
        coords,
        hit_index: None,
        capped: true,
    })
}

/// Visit counts `ℓ_z(N) = #{0 ≤ k < N : S_k = z}`.
#[derive(Debug, Clone, Default)]
pub struct LocalTimeField {
    pub counts: HashMap<Vec<i64>, u64>,
    pub horizon: usize,
}

pub fn local_times(trace: &WalkTrace, horizon: usize) -> Result<LocalTimeField> {
    if horizon > trace.len() {
        return Err(Error::Domain(format!(
            "horizon {horizon} exceeds trace length {}",
            trace.len()
        )));
    }
    let mut counts: HashMap<Vec<i64>, u64> = HashMap::new();
    for k in 0..horizon {
        *counts.entry(trace.position(k).to_vec()).or_insert(0) += 1;
    }
    Ok(LocalTimeField { counts, horizon })
}

/// One entrance/exit pair into a marked R-box. `exit` is `None` when the
/// trace ended before the walk left the entered box.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Crossing {
    pub entry: usize,
    pub exit: Option<usize>,
}

impl Crossing {
    /// Duration `τ - σ`, with a truncated exit read as `trace_len`.
    pub fn duration(&self, trace_len: usize) -> usize {
        self.exit.unwrap_or(trace_len) - self.entry
    }
}

/// Entrance times `σ_i` into marked R-boxes and exit times `τ_i` from them,
/// with `τ₀ = 1`: `σ_{j+1} = inf{k ≥ τ_j : S_k in a marked box}` and
/// `τ_{j+1} = inf{k > σ_{j+1} : S_k ∉ Λ_R([S_{σ_{j+1}}]_R)}`, truncated at
/// the end of the trace.
pub fn box_crossings(
    trace: &WalkTrace,
    marked: &HashSet<Vec<i64>>,
    r: i64,
) -> Result<Vec<Crossing>> {
    let mut out = Vec::new();
    if marked.is_empty() {
        return Ok(out);
    }
    let len = trace.len();
    let mut k = 1usize; // τ₀ := 1
    while k < len {
        // σ: next time in a marked box.
        let mut entry = None;
        while k < len {
            let label = box_index(trace.position(k), r)?;
            if marked.contains(&label) {
                entry = Some((k, label));
                break;
            }
            k += 1;
        }
        let Some((sigma, label)) = entry else { break };
        // τ: first index strictly after σ outside the entered box.
        let mut exit = None;
        let mut j = sigma + 1;
        while j < len {
            if box_index(trace.position(j), r)? != label {
                exit = Some(j);
                break;
            }
            j += 1;
        }
        out.push(Crossing { entry: sigma, exit });
        match exit {
            Some(tau) => k = tau,
            None => break,
        }
    }
    Ok(out)
}

/// Box labels visited strictly before `stop_index`:
/// `{[S_k]_R : 0 ≤ k < stop_index}`.
pub fn path_animal(trace: &WalkTrace, r: i64, stop_index: usize) -> Result<HashSet<Vec<i64>>> {
    if stop_index > trace.len() {
        return Err(Error::Domain(format!(
            "stop index {stop_index} exceeds trace length {}",
            trace.len()
        )));
    }
    let mut out = HashSet::new();
    for k in 0..stop_index {
        out.insert(box_index(trace.position(k), r)?);
    }
    Ok(out)
}

/// First index whose position lies in the R-box of `z`, i.e. `H(Λ_R([z]_R))`.
pub fn hit_index_of_box(trace: &WalkTrace, z: &[i64], r: i64) -> Result<Option<usize>> {
    let target = box_index(z, r)?;
    for (k, pos) in trace.positions().enumerate() {
        if box_index(pos, r)? == target {
            return Ok(Some(k));
        }
    }
    Ok(None)
}

/// Exact number of connected `size`-site subsets of `Z^d` containing the
/// origin, by breadth-first growth with canonical-form deduplication.
///
/// Desk budget: `d ∈ {1,2}`, `size ≤ 8`.
pub fn enumerate_animals(d: usize, size: usize) -> Result<u64> {
    if !(d == 1 || d == 2) {
        return Err(Error::Resource(format!(
            "animal enumeration supports d in {{1,2}}, got {d}"
        )));
    }
    if size == 0 || size > 8 {
        return Err(Error::Resource(format!(
            "animal enumeration budget is 1..=8 sites, got {size}"
        )));
    }
    let origin = vec![0i64; d];
    let mut level: HashSet<Vec<Vec<i64>>> = HashSet::new();
    level.insert(vec![origin]);
    for _ in 1..size {
        let mut next: HashSet<Vec<Vec<i64>>> = HashSet::new();
        for animal in &level {
            let occupied: HashSet<&Vec<i64>> = animal.iter().collect();
            for site in animal {
                for axis in 0..d {
                    for sign in [-1i64, 1] {
                        let mut nb = site.clone();
                        nb[axis] += sign;
                        if occupied.contains(&nb) {
                            continue;
                        }
                        let mut grown = animal.clone();
                        grown.push(nb.clone());
                        grown.sort();
                        next.insert(grown);
                    }
                }
            }
        }
        level = next;
    }
    Ok(level.len() as u64)
}

/// `#R_k`, the number of distinct sites visited up to time `k` (inclusive).
pub fn range_size(trace: &WalkTrace, k: usize) -> Result<usize> {
    if k >= trace.len() {
        return Err(Error::Domain(format!(
            "range time {k} exceeds trace length {}",
            trace.len()
        )));
    }
    let mut seen: HashSet<&[i64]> = HashSet::new();
    for j in 0..=k {
        seen.insert(trace.position(j));
    }
    Ok(seen.len())
}
