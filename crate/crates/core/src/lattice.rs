//! Exact discrete laws: lattice laws on an arithmetic progression (with
//! n-fold convolution by iterated doubling) and general finite discrete laws
//! for empirical data and explicit joint constructions.

use crate::{Error, Result};
use serde::{Deserialize, Serialize};

/// Per-tail mass below which lattice constructors and convolutions trim
/// atoms (the removed mass is renormalized away and tracked).
pub const TRIM_MASS: f64 = 1e-15;

/// Hard cap on convolution support growth.
pub const SUPPORT_CAP: usize = 1_000_000;

fn neumaier_sum(values: impl Iterator<Item = f64>) -> f64 {
    let mut sum = 0.0;
    let mut comp = 0.0;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// A law supported on `{origin + k·step : k ∈ Z}` with finitely many atoms.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "LatticeRepr", into = "LatticeRepr")]
pub struct LatticeLaw {
    origin: f64,
    step: f64,
    /// (offset, probability), offsets strictly increasing, probs normalized.
    atoms: Vec<(i64, f64)>,
    /// cumulative probabilities; the last entry is exactly 1.
    cum: Vec<f64>,
    /// total mass removed by trimming, relative to the untrimmed law.
    mass_defect: f64,
}

/// JSON shape: `{"origin": a, "step": h, "atoms": [[k, p], ...]}`.
#[derive(Serialize, Deserialize)]
struct LatticeRepr {
    origin: f64,
    step: f64,
    atoms: Vec<(i64, f64)>,
}

impl TryFrom<LatticeRepr> for LatticeLaw {
    type Error = Error;
    fn try_from(r: LatticeRepr) -> Result<Self> {
        LatticeLaw::new(r.origin, r.step, r.atoms)
    }
}

impl From<LatticeLaw> for LatticeRepr {
    fn from(l: LatticeLaw) -> Self {
        LatticeRepr {
            origin: l.origin,
            step: l.step,
            atoms: l.atoms,
        }
    }
}

impl LatticeLaw {
    /// Builds a lattice law; probabilities must be nonnegative and sum to 1
    /// within 1e-12 (they are renormalized exactly afterwards), offsets must
    /// be strictly increasing.
    pub fn new(origin: f64, step: f64, mut atoms: Vec<(i64, f64)>) -> Result<Self> {
        if !(step > 0.0) || !step.is_finite() || !origin.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "lattice needs finite origin and step > 0 (origin={origin}, step={step})"
            )));
        }
        if atoms.is_empty() {
            return Err(Error::InvalidParameter("lattice needs at least one atom".into()));
        }
        atoms.sort_by_key(|&(k, _)| k);
        for w in atoms.windows(2) {
            if w[0].0 == w[1].0 {
                return Err(Error::InvalidParameter("duplicate lattice offsets".into()));
            }
        }
        if atoms.iter().any(|&(_, p)| !(p >= 0.0) || !p.is_finite()) {
            return Err(Error::InvalidParameter("negative or non-finite atom mass".into()));
        }
        let total = neumaier_sum(atoms.iter().map(|&(_, p)| p));
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidParameter(format!(
                "atom masses sum to {total}, expected 1"
            )));
        }
        for a in &mut atoms {
            a.1 /= total;
        }
        Ok(Self::from_normalized(origin, step, atoms, 0.0))
    }

    fn from_normalized(origin: f64, step: f64, atoms: Vec<(i64, f64)>, defect: f64) -> Self {
        let mut cum = Vec::with_capacity(atoms.len());
        let mut acc = 0.0;
        let mut comp = 0.0;
        for &(_, p) in &atoms {
            let t = acc + p;
            if acc.abs() >= p.abs() {
                comp += (acc - t) + p;
            } else {
                comp += (p - t) + acc;
            }
            acc = t;
            cum.push(acc + comp);
        }
        if let Some(last) = cum.last_mut() {
            *last = 1.0;
        }
        LatticeLaw {
            origin,
            step,
            atoms,
            cum,
            mass_defect: defect,
        }
    }

    pub fn origin(&self) -> f64 {
        self.origin
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn atoms(&self) -> &[(i64, f64)] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    /// Mass removed by trimming so far (propagates through convolutions).
    pub fn mass_defect(&self) -> f64 {
        self.mass_defect
    }

    /// Real position of the i-th atom.
    pub fn position(&self, i: usize) -> f64 {
        self.origin + self.step * self.atoms[i].0 as f64
    }

    /// Cumulative probability strictly before the i-th atom (`F(x_i - 0)`).
    pub fn cum_before(&self, i: usize) -> f64 {
        if i == 0 {
            0.0
        } else {
            self.cum[i - 1]
        }
    }

    /// Cumulative probability through the i-th atom (`F(x_i)`).
    pub fn cum_at(&self, i: usize) -> f64 {
        self.cum[i]
    }

    pub fn cdf(&self, x: f64) -> f64 {
        // last atom with position <= x
        let idx = self.atoms.partition_point(|&(k, _)| self.origin + self.step * k as f64 <= x);
        if idx == 0 {
            0.0
        } else {
            self.cum[idx - 1]
        }
    }

    /// Atom index containing the quantile level `u`: the smallest `i` with
    /// `cum[i] >= u`. A `u` landing exactly on a cdf breakpoint resolves to
    /// the atom whose closed cdf interval has that right endpoint.
    pub fn quantile_index(&self, u: f64) -> usize {
        if u <= 0.0 {
            return 0;
        }
        let i = self.cum.partition_point(|&c| c < u);
        i.min(self.atoms.len() - 1)
    }

    /// Generalized inverse `F^{-1}(u) = inf{x : F(x) >= u}`.
    pub fn quantile(&self, u: f64) -> f64 {
        self.position(self.quantile_index(u))
    }

    /// Raw moment `E X^k`, exact atom summation.
    pub fn moment(&self, k: u32) -> f64 {
        neumaier_sum(
            self.atoms
                .iter()
                .enumerate()
                .map(|(i, &(_, p))| p * self.position(i).powi(k as i32)),
        )
    }

    /// `E |X|^q` for real q >= 0.
    pub fn abs_moment(&self, q: f64) -> f64 {
        neumaier_sum(
            self.atoms
                .iter()
                .enumerate()
                .map(|(i, &(_, p))| p * self.position(i).abs().powf(q)),
        )
    }

    /// Exact `E f(X)`.
    pub fn expect(&self, f: impl Fn(f64) -> f64) -> f64 {
        neumaier_sum(
            self.atoms
                .iter()
                .enumerate()
                .map(|(i, &(_, p))| p * f(self.position(i))),
        )
    }

    /// Removes leading/trailing atoms carrying less than `tail_mass` each and
    /// renormalizes. The removed mass accumulates in `mass_defect`.
    pub fn trimmed(&self, tail_mass: f64) -> LatticeLaw {
        let mut lo = 0usize;
        let mut acc = 0.0;
        while lo + 1 < self.atoms.len() && acc + self.atoms[lo].1 < tail_mass {
            acc += self.atoms[lo].1;
            lo += 1;
        }
        let mut hi = self.atoms.len();
        let mut acc_hi = 0.0;
        while hi > lo + 1 && acc_hi + self.atoms[hi - 1].1 < tail_mass {
            acc_hi += self.atoms[hi - 1].1;
            hi -= 1;
        }
        let removed = acc + acc_hi;
        if removed == 0.0 {
            return self.clone();
        }
        let keep = 1.0 - removed;
        let atoms: Vec<(i64, f64)> =
            self.atoms[lo..hi].iter().map(|&(k, p)| (k, p / keep)).collect();
        Self::from_normalized(self.origin, self.step, atoms, self.mass_defect + removed)
    }

    /// Exact convolution of two laws on the same step.
    pub fn convolve(&self, other: &LatticeLaw) -> Result<LatticeLaw> {
        if (self.step - other.step).abs() > 1e-12 * self.step {
            return Err(Error::InvalidParameter(format!(
                "convolution needs equal steps ({} vs {})",
                self.step, other.step
            )));
        }
        let k0 = self.atoms[0].0 + other.atoms[0].0;
        let base_a = self.atoms[0].0;
        let base_b = other.atoms[0].0;
        // dense accumulation over the full offset range of each factor
        // (supports may have gaps, so size by range, not atom count)
        let len_a = (self.atoms.last().unwrap().0 - base_a) as usize + 1;
        let len_b = (other.atoms.last().unwrap().0 - base_b) as usize + 1;
        let n = len_a + len_b - 1;
        if n > SUPPORT_CAP {
            return Err(Error::SupportCap(n));
        }
        let mut probs = vec![0.0f64; n];
        let mut dense_a = vec![0.0f64; len_a];
        for &(k, p) in &self.atoms {
            dense_a[(k - base_a) as usize] = p;
        }
        let mut dense_b = vec![0.0f64; len_b];
        for &(k, p) in &other.atoms {
            dense_b[(k - base_b) as usize] = p;
        }
        for (i, &pa) in dense_a.iter().enumerate() {
            if pa == 0.0 {
                continue;
            }
            for (j, &pb) in dense_b.iter().enumerate() {
                probs[i + j] += pa * pb;
            }
        }
        let atoms: Vec<(i64, f64)> = probs
            .into_iter()
            .enumerate()
            .filter(|&(_, p)| p > 0.0)
            .map(|(i, p)| (k0 + i as i64, p))
            .collect();
        let total = neumaier_sum(atoms.iter().map(|&(_, p)| p));
        let atoms = atoms.into_iter().map(|(k, p)| (k, p / total)).collect();
        let law = Self::from_normalized(
            self.origin + other.origin,
            self.step,
            atoms,
            self.mass_defect + other.mass_defect,
        );
        Ok(law.trimmed(TRIM_MASS))
    }

    /// Exact law of `X_1 + ... + X_n` for iid `X_i ~ self`, by iterated
    /// doubling (log2 n convolutions). Trimming keeps the mass error below
    /// `n * TRIM_MASS` up to rounding.
    pub fn convolve_n(&self, n: u32) -> Result<LatticeLaw> {
        if n == 0 {
            return Err(Error::InvalidParameter("convolve_n needs n >= 1".into()));
        }
        let mut result: Option<LatticeLaw> = None;
        let mut power = self.clone();
        let mut m = n;
        loop {
            if m & 1 == 1 {
                result = Some(match result {
                    None => power.clone(),
                    Some(r) => r.convolve(&power)?,
                });
            }
            m >>= 1;
            if m == 0 {
                break;
            }
            power = power.convolve(&power)?;
        }
        Ok(result.unwrap())
    }

    /// The law of `a·X` for `a > 0`.
    pub fn scaled(&self, a: f64) -> Result<LatticeLaw> {
        if !(a > 0.0) {
            return Err(Error::InvalidParameter("scale factor must be positive".into()));
        }
        Ok(Self::from_normalized(
            self.origin * a,
            self.step * a,
            self.atoms.clone(),
            self.mass_defect,
        ))
    }

    /// Flattens to a general discrete law.
    pub fn to_discrete(&self) -> DiscreteLaw {
        DiscreteLaw::from_normalized(
            self.atoms
                .iter()
                .enumerate()
                .map(|(i, &(_, p))| (self.position(i), p))
                .collect(),
        )
    }

    /// Total-variation distance to another law on the same grid.
    pub fn tv_distance(&self, other: &LatticeLaw) -> f64 {
        let to_map = |l: &LatticeLaw| -> std::collections::BTreeMap<i64, f64> {
            l.atoms.iter().copied().collect()
        };
        // positions must align; compare via absolute positions rounded to grid
        let a = to_map(self);
        let b = to_map(other);
        let shift = ((other.origin - self.origin) / self.step).round() as i64;
        let mut keys: std::collections::BTreeSet<i64> = a.keys().copied().collect();
        keys.extend(b.keys().map(|k| k + shift));
        0.5 * keys
            .into_iter()
            .map(|k| {
                let pa = a.get(&k).copied().unwrap_or(0.0);
                let pb = b.get(&(k - shift)).copied().unwrap_or(0.0);
                (pa - pb).abs()
            })
            .sum::<f64>()
    }
}

/// A finite discrete law with arbitrary real atom positions (empirical laws,
/// explicit joints). Left-continuous-inverse quantile convention.
#[derive(Clone, Debug, PartialEq)]
pub struct DiscreteLaw {
    points: Vec<(f64, f64)>,
    cum: Vec<f64>,
}

impl DiscreteLaw {
    pub fn new(mut points: Vec<(f64, f64)>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidParameter("discrete law needs atoms".into()));
        }
        points.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        // merge duplicates
        let mut merged: Vec<(f64, f64)> = Vec::with_capacity(points.len());
        for (x, p) in points {
            if !(p >= 0.0) || !x.is_finite() {
                return Err(Error::InvalidParameter("bad discrete atom".into()));
            }
            match merged.last_mut() {
                Some(last) if last.0 == x => last.1 += p,
                _ => merged.push((x, p)),
            }
        }
        let total = neumaier_sum(merged.iter().map(|&(_, p)| p));
        if total <= 0.0 {
            return Err(Error::InvalidParameter("zero total mass".into()));
        }
        for m in &mut merged {
            m.1 /= total;
        }
        Ok(Self::from_normalized(merged))
    }

    fn from_normalized(points: Vec<(f64, f64)>) -> Self {
        let mut cum = Vec::with_capacity(points.len());
        let mut acc = 0.0;
        for &(_, p) in &points {
            acc += p;
            cum.push(acc);
        }
        if let Some(last) = cum.last_mut() {
            *last = 1.0;
        }
        DiscreteLaw { points, cum }
    }

    /// Empirical law of a sample (each point mass 1/n).
    pub fn empirical(samples: &[f64]) -> Result<Self> {
        Self::new(samples.iter().map(|&x| (x, 1.0)).collect())
    }

    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }

    pub fn cum_before(&self, i: usize) -> f64 {
        if i == 0 {
            0.0
        } else {
            self.cum[i - 1]
        }
    }

    pub fn cum_at(&self, i: usize) -> f64 {
        self.cum[i]
    }

    pub fn cdf(&self, x: f64) -> f64 {
        let idx = self.points.partition_point(|&(y, _)| y <= x);
        if idx == 0 {
            0.0
        } else {
            self.cum[idx - 1]
        }
    }

    pub fn quantile_index(&self, u: f64) -> usize {
        if u <= 0.0 {
            return 0;
        }
        self.cum.partition_point(|&c| c < u).min(self.points.len() - 1)
    }

    pub fn quantile(&self, u: f64) -> f64 {
        self.points[self.quantile_index(u)].0
    }

    pub fn expect(&self, f: impl Fn(f64) -> f64) -> f64 {
        neumaier_sum(self.points.iter().map(|&(x, p)| p * f(x)))
    }

    pub fn moment(&self, k: u32) -> f64 {
        self.expect(|x| x.powi(k as i32))
    }

    /// Law of `X + Y` for independent X ~ self, Y ~ other.
    pub fn convolve_independent(&self, other: &DiscreteLaw) -> Result<DiscreteLaw> {
        let mut pts = Vec::with_capacity(self.points.len() * other.points.len());
        for &(x, p) in &self.points {
            for &(y, q) in &other.points {
                pts.push((x + y, p * q));
            }
        }
        DiscreteLaw::new(pts)
    }

    /// Law of `|X|`.
    pub fn abs_law(&self) -> DiscreteLaw {
        DiscreteLaw::new(self.points.iter().map(|&(x, p)| (x.abs(), p)).collect()).unwrap()
    }
}
