//! Coupled potential fields on finite lattice boxes.
//!
//! A [`UniformField`] assigns one uniform value to every site of a box via a
//! counter-based hash of `(seed, coordinates)`, so enlarging the box never
//! changes existing values. A [`PotentialField`] is the sitewise pseudo-inverse
//! image `ω_φ(x) = φ⁻¹(U(x))`; realizing two specs from one uniform field
//! couples them monotonically.

use crate::dist::DistributionSpec;
use crate::error::{Error, Result};
use crate::exec;
use crate::rng::{site_uniform, GENERATOR_ID};

/// Axis-aligned box of lattice sites with inclusive corners.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LatticeBox {
    pub lo: Vec<i64>,
    pub hi: Vec<i64>,
}

impl LatticeBox {
    pub fn new(lo: Vec<i64>, hi: Vec<i64>) -> Result<Self> {
        if lo.is_empty() || lo.len() != hi.len() {
            return Err(Error::Domain(
                "box corners must share a dimension >= 1".into(),
            ));
        }
        if lo.iter().zip(&hi).any(|(a, b)| a > b) {
            return Err(Error::Domain(format!("empty box lo={lo:?} hi={hi:?}")));
        }
        Ok(LatticeBox { lo, hi })
    }

    /// Bounding box of two sites inflated by `margin` on every face.
    pub fn hull(a: &[i64], b: &[i64], margin: i64) -> Result<Self> {
        if a.len() != b.len() || a.is_empty() {
            return Err(Error::Domain(
                "hull endpoints must share a dimension".into(),
            ));
        }
        if margin < 0 {
            return Err(Error::Domain(format!("margin {margin} < 0")));
        }
        let lo = a.iter().zip(b).map(|(x, y)| x.min(y) - margin).collect();
        let hi = a.iter().zip(b).map(|(x, y)| x.max(y) + margin).collect();
        LatticeBox::new(lo, hi)
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn extent(&self, axis: usize) -> usize {
        (self.hi[axis] - self.lo[axis] + 1) as usize
    }

    pub fn len(&self) -> usize {
        (0..self.dim()).map(|a| self.extent(a)).product()
    }

    pub fn is_empty(&self) -> bool {
        false // corners are inclusive; constructor rejects empty boxes
    }

    pub fn contains(&self, site: &[i64]) -> bool {
        site.len() == self.dim()
            && site
                .iter()
                .enumerate()
                .all(|(a, &c)| self.lo[a] <= c && c <= self.hi[a])
    }

    /// All coordinates strictly between the faces.
    pub fn contains_interior(&self, site: &[i64]) -> bool {
        site.len() == self.dim()
            && site
                .iter()
                .enumerate()
                .all(|(a, &c)| self.lo[a] < c && c < self.hi[a])
    }

    /// Row-major flat index.
    pub fn index(&self, site: &[i64]) -> Option<usize> {
        if !self.contains(site) {
            return None;
        }
        let mut idx = 0usize;
        for (axis, &c) in site.iter().enumerate() {
            idx = idx * self.extent(axis) + (c - self.lo[axis]) as usize;
        }
        Some(idx)
    }

    pub fn site(&self, mut idx: usize) -> Vec<i64> {
        let mut out = vec![0i64; self.dim()];
        for axis in (0..self.dim()).rev() {
            let ext = self.extent(axis);
            out[axis] = self.lo[axis] + (idx % ext) as i64;
            idx /= ext;
        }
        out
    }

    pub fn sites(&self) -> impl Iterator<Item = Vec<i64>> + '_ {
        (0..self.len()).map(move |i| self.site(i))
    }
}

/// Where a potential field's values came from.
#[derive(Debug, Clone, PartialEq)]
pub enum Provenance {
    /// Realized as `φ⁻¹(U)` from the keyed uniform field with this seed.
    Realized { spec_id: String, seed: u64 },
    /// Values assigned directly (e.g. a difference field or test fixture).
    Explicit,
}

/// I.i.d. uniforms in (0,1), one per site of a box.
#[derive(Debug, Clone)]
pub struct UniformField {
    pub domain: LatticeBox,
    pub values: Vec<f64>,
    pub seed: u64,
    pub generator: &'static str,
}

/// Sample the keyed uniform field on `domain`.
pub fn sample_uniform_field(domain: &LatticeBox, seed: u64) -> UniformField {
    let values = exec::map_replicas(domain.len() as u64, |i| {
        site_uniform(seed, &domain.site(i as usize))
    });
    UniformField {
        domain: domain.clone(),
        values,
        seed,
        generator: GENERATOR_ID,
    }
}

impl UniformField {
    pub fn at(&self, site: &[i64]) -> f64 {
        self.values[self.domain.index(site).expect("site inside domain")]
    }
}

/// A nonnegative potential on a box.
#[derive(Debug, Clone, PartialEq)]
pub struct PotentialField {
    pub domain: LatticeBox,
    pub values: Vec<f64>,
    pub provenance: Provenance,
}

impl PotentialField {
    pub fn from_values(domain: LatticeBox, values: Vec<f64>) -> Result<Self> {
        if values.len() != domain.len() {
            return Err(Error::Domain("value count does not match domain".into()));
        }
        if values.iter().any(|v| v.is_nan() || *v < 0.0) {
            return Err(Error::Domain("potential values must be >= 0".into()));
        }
        Ok(PotentialField {
            domain,
            values,
            provenance: Provenance::Explicit,
        })
    }

    pub fn constant(domain: LatticeBox, value: f64) -> Result<Self> {
        let n = domain.len();
        Self::from_values(domain, vec![value; n])
    }

    pub fn at(&self, site: &[i64]) -> f64 {
        self.values[self.domain.index(site).expect("site inside domain")]
    }

    pub fn dim(&self) -> usize {
        self.domain.dim()
    }
}

/// Realize `ω_φ(x) = φ⁻¹(U(x))` sitewise.
pub fn realize(u: &UniformField, spec: &DistributionSpec) -> PotentialField {
    let values = exec::map_replicas(u.values.len() as u64, |i| {
        spec.pseudo_inverse(u.values[i as usize])
            .expect("uniform values lie in (0,1)")
    });
    PotentialField {
        domain: u.domain.clone(),
        values,
        provenance: Provenance::Realized {
            spec_id: spec.id(),
            seed: u.seed,
        },
    }
}

/// Convenience: sample the uniforms and realize in one step.
pub fn realize_seeded(domain: &LatticeBox, spec: &DistributionSpec, seed: u64) -> PotentialField {
    realize(&sample_uniform_field(domain, seed), spec)
}

/// Sitewise difference `Δ_{F,G}(x) = ω_F(x) - ω_G(x)` of a coupled pair.
///
/// A negative difference anywhere signals a broken coupling (mismatched
/// uniforms, or `F` not above `G`) and is rejected.
pub fn delta_field(omega_f: &PotentialField, omega_g: &PotentialField) -> Result<PotentialField> {
    if omega_f.domain != omega_g.domain {
        return Err(Error::Domain("delta of fields on different domains".into()));
    }
    let mut values = Vec::with_capacity(omega_f.values.len());
    for (i, (&a, &b)) in omega_f.values.iter().zip(&omega_g.values).enumerate() {
        let d = a - b;
        if d < 0.0 {
            return Err(Error::CouplingViolation(format!(
                "negative gap {d} at site {:?}",
                omega_f.domain.site(i)
            )));
        }
        values.push(d);
    }
    Ok(PotentialField {
        domain: omega_f.domain.clone(),
        values,
        provenance: Provenance::Explicit,
    })
}

impl PotentialField {
    /// Text snapshot: one header line, then one `x₁ … x_d value` line per site.
    pub fn to_text(&self) -> String {
        let (spec_id, seed) = match &self.provenance {
            Provenance::Realized { spec_id, seed } => (spec_id.clone(), *seed),
            Provenance::Explicit => ("explicit".to_string(), 0),
        };
        let fmt_corner = |c: &[i64]| {
            c.iter()
                .map(|v| v.to_string())
                .collect::<Vec<_>>()
                .join(",")
        };
        let mut out = format!(
            "potential d={} lo={} hi={} seed={} spec={}\n",
            self.dim(),
            fmt_corner(&self.domain.lo),
            fmt_corner(&self.domain.hi),
            seed,
            spec_id
        );
        for (i, v) in self.values.iter().enumerate() {
            let site = self.domain.site(i);
            for c in &site {
                out.push_str(&c.to_string());
                out.push(' ');
            }
            out.push_str(&crate::fmt_f64(*v));
            out.push('\n');
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::Domain("empty field snapshot".into()))?;
        let mut d = 0usize;
        let mut lo = Vec::new();
        let mut hi = Vec::new();
        let mut seed = 0u64;
        let mut spec_id = String::new();
        for tok in header.split_whitespace().skip(1) {
            let (key, val) = tok
                .split_once('=')
                .ok_or_else(|| Error::Domain(format!("bad header token {tok}")))?;
            match key {
                "d" => d = val.parse().map_err(|_| Error::Domain("bad d".into()))?,
                "lo" | "hi" => {
                    let corner: Result<Vec<i64>> = val
                        .split(',')
                        .map(|s| s.parse().map_err(|_| Error::Domain("bad corner".into())))
                        .collect();
                    if key == "lo" {
                        lo = corner?;
                    } else {
                        hi = corner?;
                    }
                }
                "seed" => seed = val.parse().map_err(|_| Error::Domain("bad seed".into()))?,
                "spec" => spec_id = val.to_string(),
                _ => {}
            }
        }
        if lo.len() != d || hi.len() != d {
            return Err(Error::Domain("header dimensions inconsistent".into()));
        }
        let domain = LatticeBox::new(lo, hi)?;
        let mut values = vec![0.0; domain.len()];
        let mut seen = 0usize;
        for line in lines {
            if line.trim().is_empty() {
                continue;
            }
            let toks: Vec<&str> = line.split_whitespace().collect();
            if toks.len() != d + 1 {
                return Err(Error::Domain(format!("bad site line: {line}")));
            }
            let site: Result<Vec<i64>> = toks[..d]
                .iter()
                .map(|s| {
                    s.parse()
                        .map_err(|_| Error::Domain("bad coordinate".into()))
                })
                .collect();
            let site = site?;
            let v: f64 = toks[d]
                .parse()
                .map_err(|_| Error::Domain("bad value".into()))?;
            let idx = domain
                .index(&site)
                .ok_or_else(|| Error::Domain(format!("site {site:?} outside header box")))?;
            values[idx] = v;
            seen += 1;
        }
        if seen != domain.len() {
            return Err(Error::Domain(format!(
                "snapshot has {seen} sites, box holds {}",
                domain.len()
            )));
        }
        let provenance = if spec_id == "explicit" {
            Provenance::Explicit
        } else {
            Provenance::Realized { spec_id, seed }
        };
        Ok(PotentialField {
            domain,
            values,
            provenance,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::{dominance_witness, DistributionSpec};

    fn bern_f() -> DistributionSpec {
        DistributionSpec::atomic(vec![(0.0, 0.3), (1.0, 0.7)]).unwrap()
    }
    fn bern_g() -> DistributionSpec {
        DistributionSpec::atomic(vec![(0.0, 0.6), (1.0, 0.4)]).unwrap()
    }

    #[test]
    fn box_indexing_round_trips() {
        let b = LatticeBox::new(vec![-2, 3], vec![1, 5]).unwrap();
        assert_eq!(b.len(), 4 * 3);
        for i in 0..b.len() {
            let s = b.site(i);
            assert_eq!(b.index(&s), Some(i));
        }
        assert_eq!(b.index(&[2, 4]), None);
    }

    #[test]
    fn uniform_values_agree_across_domains() {
        let small = LatticeBox::new(vec![0], vec![4]).unwrap();
        let large = LatticeBox::new(vec![-10], vec![20]).unwrap();
        let us = sample_uniform_field(&small, 99);
        let ul = sample_uniform_field(&large, 99);
        for site in small.sites() {
            assert_eq!(us.at(&site).to_bits(), ul.at(&site).to_bits());
        }
    }

    #[test]
    fn uniform_mean_near_half() {
        let b = LatticeBox::new(vec![0], vec![99_999]).unwrap();
        let u = sample_uniform_field(&b, 7);
        let mean: f64 = u.values.iter().sum::<f64>() / u.values.len() as f64;
        assert!((mean - 0.5).abs() < 0.01, "mean {mean}");
    }

    #[test]
    fn distinct_seeds_differ_almost_everywhere() {
        let b = LatticeBox::new(vec![0], vec![9_999]).unwrap();
        let a = sample_uniform_field(&b, 1);
        let c = sample_uniform_field(&b, 2);
        let same = a
            .values
            .iter()
            .zip(&c.values)
            .filter(|(x, y)| x.to_bits() == y.to_bits())
            .count();
        assert!(same < 100, "{same} collisions out of 10^4");
    }

    #[test]
    fn realize_point_masses() {
        let b = LatticeBox::new(vec![-3, -3], vec![3, 3]).unwrap();
        let u = sample_uniform_field(&b, 5);
        let zero = realize(&u, &DistributionSpec::point(0.0).unwrap());
        assert!(zero.values.iter().all(|&v| v == 0.0));
        let f = realize(&u, &DistributionSpec::point(1.0).unwrap());
        let g = realize(&u, &DistributionSpec::point(0.0).unwrap());
        let delta = delta_field(&f, &g).unwrap();
        assert!(delta.values.iter().all(|&v| v == 1.0));
        let same = delta_field(&f, &f).unwrap();
        assert!(same.values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn realize_exponential_moment() {
        let b = LatticeBox::new(vec![0], vec![99_999]).unwrap();
        let u = sample_uniform_field(&b, 21);
        let w = realize(&u, &DistributionSpec::exponential(1.0).unwrap());
        let mean: f64 = w.values.iter().sum::<f64>() / w.values.len() as f64;
        assert!((mean - 1.0).abs() < 0.02, "mean {mean}");
    }

    #[test]
    fn coupled_monotonicity_is_exact() {
        let b = LatticeBox::new(vec![-20, -20], vec![20, 20]).unwrap();
        for seed in 0..5 {
            let u = sample_uniform_field(&b, seed);
            let wf = realize(&u, &bern_f());
            let wg = realize(&u, &bern_g());
            for (a, c) in wf.values.iter().zip(&wg.values) {
                assert!(a >= c);
            }
            // Δ ≥ η₀ exactly on sites with U in (0.3, 0.6].
            let w = dominance_witness(&bern_f(), &bern_g()).unwrap();
            let delta = delta_field(&wf, &wg).unwrap();
            for (i, &dv) in delta.values.iter().enumerate() {
                let uu = u.values[i];
                let in_window = uu > 0.3 && uu <= 0.6;
                assert_eq!(dv >= w.eta0, in_window, "u={uu} delta={dv}");
            }
        }
    }

    #[test]
    fn coupling_probability_dominates_h_measure() {
        let b = LatticeBox::new(vec![0], vec![99_999]).unwrap();
        let u = sample_uniform_field(&b, 13);
        let wf = realize(&u, &bern_f());
        let wg = realize(&u, &bern_g());
        let w = dominance_witness(&bern_f(), &bern_g()).unwrap();
        let n = b.len() as f64;
        let freq = wf
            .values
            .iter()
            .zip(&wg.values)
            .filter(|(a, c)| **a >= **c + w.eta0)
            .count() as f64
            / n;
        let se = (freq * (1.0 - freq) / n).sqrt();
        assert!(
            freq >= w.h_measure() - 3.0 * se,
            "freq {freq} |H| {}",
            w.h_measure()
        );
    }

    #[test]
    fn delta_rejects_broken_coupling() {
        let b = LatticeBox::new(vec![0], vec![3]).unwrap();
        let hi = PotentialField::constant(b.clone(), 1.0).unwrap();
        let lo = PotentialField::constant(b, 2.0).unwrap();
        assert!(matches!(
            delta_field(&hi, &lo),
            Err(Error::CouplingViolation(_))
        ));
    }

    #[test]
    fn snapshot_round_trip() {
        let b = LatticeBox::new(vec![-2, 0], vec![1, 2]).unwrap();
        let u = sample_uniform_field(&b, 17);
        let w = realize(&u, &DistributionSpec::exponential(1.3).unwrap());
        let text = w.to_text();
        let back = PotentialField::from_text(&text).unwrap();
        assert_eq!(back.domain, w.domain);
        assert_eq!(back.provenance, w.provenance);
        for (a, c) in back.values.iter().zip(&w.values) {
            assert_eq!(a.to_bits(), c.to_bits());
        }
    }
}
