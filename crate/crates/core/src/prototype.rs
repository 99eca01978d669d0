//! Prototype filter design and first-order intrinsic-interference weights.
//!
//! The filter starts from a frequency-sampling design (coefficients come from
//! a fixture table) and is then refined by Gauss-Newton iterations until the
//! modulated atoms are exactly orthogonal in the real field, which is what
//! makes `Re{AFB(SFB(D))} = D` hold to machine precision.
//!
//! Atoms follow
//!
//! ```text
//! g_{m,n}(l) = g(l - n M/2) exp(j 2 pi m (l - (L-1)/2) / M) exp(j phi_{m,n})
//! phi_{m,n}  = (m + n) pi/2 + m n pi
//! ```

use std::f64::consts::{FRAC_PI_2, PI};
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::Deserialize;

use crate::error::{Error, Result};

const DEFAULT_COEFFICIENTS: &str = include_str!("../fixtures/prototype.toml");

/// Real-orthogonality residual the refinement must reach.
const ORTHOGONALITY_TOL: f64 = 1e-13;
const MAX_REFINE_ITERS: usize = 60;

/// Weights below this magnitude are zero in the neighborhood grid.
pub const WEIGHT_ZERO_TOL: f64 = 1e-6;

// ---------------------------------------------------------------------------
// Coefficient fixture
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoefficientEntry {
    pub overlap: usize,
    pub coefficients: Vec<f64>,
}

/// Table mapping overlap factor K to frequency-sampling coefficients.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoefficientTable {
    #[serde(rename = "prototype")]
    pub entries: Vec<CoefficientEntry>,
}

impl CoefficientTable {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let table: Self = toml::from_str(text).map_err(|e| Error::Fixture(e.to_string()))?;
        for entry in &table.entries {
            if entry.coefficients.len() != entry.overlap {
                return Err(Error::Fixture(format!(
                    "overlap {} lists {} coefficients",
                    entry.overlap,
                    entry.coefficients.len()
                )));
            }
        }
        Ok(table)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    /// The table shipped with the crate.
    pub fn builtin() -> Self {
        Self::from_toml_str(DEFAULT_COEFFICIENTS).expect("builtin prototype fixture is valid")
    }

    pub fn coefficients(&self, overlap: usize) -> Option<&[f64]> {
        self.entries
            .iter()
            .find(|e| e.overlap == overlap)
            .map(|e| e.coefficients.as_slice())
    }
}

// ---------------------------------------------------------------------------
// Filter
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq)]
pub struct PrototypeFilter {
    taps: Vec<f64>,
    num_subcarriers: usize,
    overlap: usize,
}

impl PrototypeFilter {
    /// Wraps externally designed taps after checking length, energy and symmetry.
    pub fn from_taps(taps: Vec<f64>, num_subcarriers: usize, overlap: usize) -> Result<Self> {
        check_dims(num_subcarriers, overlap)?;
        if taps.len() != num_subcarriers * overlap {
            return Err(Error::BadPrototype(format!(
                "expected {} taps, got {}",
                num_subcarriers * overlap,
                taps.len()
            )));
        }
        let energy: f64 = taps.iter().map(|t| t * t).sum();
        if (energy - 1.0).abs() > 1e-12 {
            return Err(Error::BadPrototype(format!("energy {energy} is not 1")));
        }
        let l = taps.len();
        if (0..l / 2).any(|i| (taps[i] - taps[l - 1 - i]).abs() > 1e-12) {
            return Err(Error::BadPrototype("taps are not symmetric".into()));
        }
        Ok(Self {
            taps,
            num_subcarriers,
            overlap,
        })
    }

    pub fn taps(&self) -> &[f64] {
        &self.taps
    }

    pub fn len(&self) -> usize {
        self.taps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.taps.is_empty()
    }

    pub fn num_subcarriers(&self) -> usize {
        self.num_subcarriers
    }

    pub fn overlap(&self) -> usize {
        self.overlap
    }

    /// Centre of the modulation, `(L_g - 1) / 2`.
    pub fn center(&self) -> f64 {
        (self.taps.len() as f64 - 1.0) / 2.0
    }

    /// Hop between consecutive FBMC symbols, `M / 2` samples.
    pub fn hop(&self) -> usize {
        self.num_subcarriers / 2
    }

    /// Ratio `g_{m+M,n} / g_{m,n}`: +1 when the subcarrier index wraps
    /// seamlessly, -1 when crossing the band edge flips the atom's sign.
    pub fn wrap_sign(&self) -> f64 {
        if (self.len() - 1 + self.num_subcarriers / 2).is_multiple_of(2) {
            1.0
        } else {
            -1.0
        }
    }

    fn tap(&self, index: i64) -> f64 {
        if index < 0 || index as usize >= self.taps.len() {
            0.0
        } else {
            self.taps[index as usize]
        }
    }

    /// Sample `l` of the atom `g_{m,n}`.
    pub fn atom_sample(&self, m: usize, n: i64, l: i64) -> Complex64 {
        let g = self.tap(l - n * self.hop() as i64);
        if g == 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        let arg = 2.0 * PI * m as f64 * (l as f64 - self.center()) / self.num_subcarriers as f64;
        Complex64::from_polar(g, arg) * ambient_phasor(m, n)
    }

    /// `<g_{m,n}, g_{p,q}> = sum_l g_{m,n}(l) conj(g_{p,q}(l))`.
    pub fn atom_inner_product(&self, m: usize, n: i64, p: usize, q: i64) -> Complex64 {
        let hop = self.hop() as i64;
        let len = self.taps.len() as i64;
        let start = (n * hop).max(q * hop);
        let end = (n * hop + len).min(q * hop + len);
        let mm = self.num_subcarriers as f64;
        let dm = m as f64 - p as f64;
        let mut acc = Complex64::new(0.0, 0.0);
        for l in start..end {
            let w = self.tap(l - n * hop) * self.tap(l - q * hop);
            let arg = 2.0 * PI * dm * (l as f64 - self.center()) / mm;
            acc += Complex64::from_polar(w, arg);
        }
        acc * ambient_phasor(m, n) * ambient_phasor(p, q).conj()
    }
}

fn check_dims(num_subcarriers: usize, overlap: usize) -> Result<()> {
    if num_subcarriers < 4 || !num_subcarriers.is_multiple_of(2) {
        return Err(Error::InvalidParameter(format!(
            "number of subcarriers must be even and at least 4, got {num_subcarriers}"
        )));
    }
    if overlap < 2 {
        return Err(Error::InvalidParameter(format!(
            "overlap factor must be at least 2, got {overlap}"
        )));
    }
    Ok(())
}

/// `phi_{m,n} = (m + n) pi/2 + m n pi`, reduced to `[0, 2 pi)`.
pub fn ambient_phase(m: usize, n: i64) -> f64 {
    quarter_turns(m, n) as f64 * FRAC_PI_2
}

/// `exp(j phi_{m,n})`, evaluated exactly.
pub fn ambient_phasor(m: usize, n: i64) -> Complex64 {
    match quarter_turns(m, n) {
        0 => Complex64::new(1.0, 0.0),
        1 => Complex64::new(0.0, 1.0),
        2 => Complex64::new(-1.0, 0.0),
        _ => Complex64::new(0.0, -1.0),
    }
}

fn quarter_turns(m: usize, n: i64) -> i64 {
    let m = (m % 4) as i64;
    let n = n.rem_euclid(4);
    (m + n + 2 * m * n).rem_euclid(4)
}

// ---------------------------------------------------------------------------
// Design
// ---------------------------------------------------------------------------

/// Designs the default prototype for `M` subcarriers and overlap `K`.
pub fn design_prototype(num_subcarriers: usize, overlap: usize) -> Result<PrototypeFilter> {
    design_prototype_with(num_subcarriers, overlap, &CoefficientTable::builtin())
}

pub fn design_prototype_with(
    num_subcarriers: usize,
    overlap: usize,
    table: &CoefficientTable,
) -> Result<PrototypeFilter> {
    check_dims(num_subcarriers, overlap)?;
    let coefficients = table
        .coefficients(overlap)
        .ok_or_else(|| Error::InvalidParameter(format!("no prototype coefficients for overlap {overlap}")))?;
    let sampled = frequency_sampling(num_subcarriers, overlap, coefficients);
    let taps = refine_orthogonality(sampled, num_subcarriers, overlap)?;
    PrototypeFilter::from_taps(taps, num_subcarriers, overlap)
}

fn frequency_sampling(num_subcarriers: usize, overlap: usize, coefficients: &[f64]) -> Vec<f64> {
    let len = num_subcarriers * overlap;
    let mid = (len as f64 - 1.0) / 2.0;
    let mut taps: Vec<f64> = (0..len)
        .map(|n| {
            let t = n as f64 - mid;
            coefficients[0]
                + coefficients
                    .iter()
                    .enumerate()
                    .skip(1)
                    .map(|(k, c)| 2.0 * c * (2.0 * PI * k as f64 * t / len as f64).cos())
                    .sum::<f64>()
        })
        .collect();
    let norm = taps.iter().map(|t| t * t).sum::<f64>().sqrt();
    taps.iter_mut().for_each(|t| *t /= norm);
    taps
}

/// One real-orthogonality condition `Re<g_{m,n}, g_{0,0}> = [m = n = 0]`.
struct Condition {
    shift: i64,
    m: usize,
    n: i64,
}

/// Gauss-Newton refinement of the symmetric half of the taps so that every
/// real inner product between distinct atoms vanishes and the energy is one.
/// Steps are minimum-norm, so the result stays close to the sampled design.
fn refine_orthogonality(taps: Vec<f64>, num_subcarriers: usize, overlap: usize) -> Result<Vec<f64>> {
    let len = taps.len();
    let half = len / 2;
    let hop = (num_subcarriers / 2) as i64;
    let center = (len as f64 - 1.0) / 2.0;
    let span = 2 * overlap as i64 - 1;

    let conditions: Vec<Condition> = (0..num_subcarriers)
        .flat_map(|m| (-span..=span).map(move |n| Condition { shift: n * hop, m, n }))
        .collect();

    // cos(2 pi m (l - c)/M + phi_{m,n}) tabulated per condition
    let weights: Vec<Vec<f64>> = conditions
        .iter()
        .map(|c| {
            let phi = ambient_phase(c.m, c.n);
            (0..len)
                .map(|l| (2.0 * PI * c.m as f64 * (l as f64 - center) / num_subcarriers as f64 + phi).cos())
                .collect()
        })
        .collect();

    let expand = |x: &DVector<f64>| -> Vec<f64> { (0..len).map(|l| x[l.min(len - 1 - l)]).collect() };
    let at = |g: &[f64], idx: i64| -> f64 {
        if idx < 0 || idx as usize >= len {
            0.0
        } else {
            g[idx as usize]
        }
    };

    let mut x = DVector::from_iterator(half, taps[..half].iter().copied());
    let mut best = f64::INFINITY;
    for _ in 0..MAX_REFINE_ITERS {
        let g = expand(&x);
        let mut residual = DVector::zeros(conditions.len());
        let mut jacobian = DMatrix::zeros(conditions.len(), half);
        for (row, (cond, w)) in conditions.iter().zip(&weights).enumerate() {
            let mut r = 0.0;
            for l in 0..len as i64 {
                r += g[l as usize] * at(&g, l - cond.shift) * w[l as usize];
            }
            if cond.m == 0 && cond.n == 0 {
                r -= 1.0;
            }
            residual[row] = r;
            for k in 0..len as i64 {
                let mut d = at(&g, k - cond.shift) * w[k as usize];
                let k2 = k + cond.shift;
                if k2 >= 0 && (k2 as usize) < len {
                    d += at(&g, k2) * w[k2 as usize];
                }
                let col = (k as usize).min(len - 1 - k as usize);
                jacobian[(row, col)] += d;
            }
        }
        let err = residual.amax();
        best = best.min(err);
        if err < ORTHOGONALITY_TOL {
            return Ok(g);
        }
        let svd = jacobian.svd(true, true);
        let step = svd
            .solve(&residual, 1e-10 * svd.singular_values.max())
            .map_err(|e| Error::BadPrototype(e.to_string()))?;
        x -= step;
    }
    Err(Error::BadPrototype(format!(
        "orthogonality refinement stalled at residual {best:e}"
    )))
}

// ---------------------------------------------------------------------------
// Interference weights
// ---------------------------------------------------------------------------

/// First-order interference weights of the pattern
///
/// ```text
///  (-1)^p d   -b   (-1)^p d
/// -(-1)^p g    .    (-1)^p g
///  (-1)^p d    b   (-1)^p d
/// ```
///
/// (rows: frequency p-1, p, p+1; columns: time q-1, q, q+1).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InterferenceWeights {
    pub beta: f64,
    pub gamma: f64,
    pub delta: f64,
}

impl InterferenceWeights {
    /// Signed weight applied to `d_{p+dp, q+dq}` in the pseudo-symbol at `(p, q)`.
    pub fn weight(&self, p: usize, dp: i64, dq: i64) -> f64 {
        let parity = if p.is_multiple_of(2) { 1.0 } else { -1.0 };
        let w = match (dp, dq) {
            (-1, 0) => -self.beta,
            (1, 0) => self.beta,
            (0, -1) => -parity * self.gamma,
            (0, 1) => parity * self.gamma,
            (-1 | 1, -1 | 1) => parity * self.delta,
            _ => 0.0,
        };
        if w.abs() < WEIGHT_ZERO_TOL {
            0.0
        } else {
            w
        }
    }

    /// 3x3 grid of signed weights around a point on subcarrier parity `p`.
    pub fn neighborhood(&self, p: usize) -> [[f64; 3]; 3] {
        let mut grid = [[0.0; 3]; 3];
        for (i, row) in grid.iter_mut().enumerate() {
            for (j, w) in row.iter_mut().enumerate() {
                *w = self.weight(p, i as i64 - 1, j as i64 - 1);
            }
        }
        grid
    }

    /// `2 beta^2 + 2 gamma^2 + 4 delta^2`, the interference power per unit symbol variance.
    pub fn first_order_energy(&self) -> f64 {
        2.0 * self.beta.powi(2) + 2.0 * self.gamma.powi(2) + 4.0 * self.delta.powi(2)
    }
}

/// Computes `(beta, gamma, delta)` from inner products around an interior point.
pub fn compute_weights(filter: &PrototypeFilter) -> Result<InterferenceWeights> {
    compute_weights_at(filter, 2, 2)
}

/// As [`compute_weights`], using the reference point `(p, q)`. The point must
/// not sit on the band edge, since the wrap may flip signs there.
pub fn compute_weights_at(filter: &PrototypeFilter, p: usize, q: i64) -> Result<InterferenceWeights> {
    let m = filter.num_subcarriers();
    if p == 0 || p + 1 >= m {
        return Err(Error::InvalidParameter(format!(
            "reference subcarrier {p} touches the band edge"
        )));
    }
    let parity = if p.is_multiple_of(2) { 1.0 } else { -1.0 };
    let ip = |dp: i64, dq: i64| filter.atom_inner_product((p as i64 + dp) as usize, q + dq, p, q);

    let weights = InterferenceWeights {
        beta: ip(1, 0).im,
        gamma: parity * ip(0, 1).im,
        delta: parity * ip(1, 1).im,
    };

    for dp in -1..=1 {
        for dq in -1..=1 {
            if dp == 0 && dq == 0 {
                continue;
            }
            let v = ip(dp, dq);
            let expected = weights.weight(p, dp, dq);
            if v.re.abs() > 1e-9 || (v.im - expected).abs() > 1e-9 {
                return Err(Error::BadPrototype(format!(
                    "neighbor ({dp},{dq}) = {v} does not follow the symmetric pattern"
                )));
            }
        }
    }
    let InterferenceWeights { beta, gamma, delta } = weights;
    if !(gamma > beta && beta > delta && delta > 0.0) {
        return Err(Error::BadPrototype(format!(
            "weights violate gamma > beta > delta > 0: beta={beta}, gamma={gamma}, delta={delta}"
        )));
    }
    Ok(weights)
}
