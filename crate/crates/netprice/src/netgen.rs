//! Truncated power-law degree sampling and disassortative production
//! network generation.

use std::collections::HashMap;
use std::sync::{Mutex, OnceLock};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::weighted::WeightedAliasIndex;
use rand_distr::Distribution;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::moments::{MomentProvider, TruncatedPareto};
use crate::sparse::CscMatrix;
use crate::spectral;

/// Weight given to irreducibility-repair edges before renormalization.
pub const REPAIR_WEIGHT: f64 = 1e-6;
pub const REPAIR_ROUNDS: usize = 3;
/// Bisection bracket for the tilt exponent.
const TILT_BRACKET: (f64, f64) = (0.0, 4.0);
const TILT_STEPS: usize = 16;
const CALIBRATION_DRAWS: u64 = 2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkParams {
    pub n: usize,
    pub alpha: f64,
    pub d_min: usize,
    pub d_max: usize,
    pub nu: f64,
    /// Scale of the target law κ_i = B d_i^{-ν}; it cancels in every fit.
    #[serde(rename = "B")]
    pub b: f64,
    pub seed: u64,
    /// Share of each buyer's sampling weight placed outside its sector.
    pub cross_share: f64,
    /// Tilt exponent ν_w. Calibrated from the other fields when absent.
    #[serde(default)]
    pub tilt: Option<f64>,
}

impl Default for NetworkParams {
    fn default() -> Self {
        NetworkParams {
            n: 2000,
            alpha: 2.5,
            d_min: 2,
            d_max: 100,
            nu: 0.5,
            b: 1.0,
            seed: 0,
            cross_share: 0.1,
            tilt: None,
        }
    }
}

impl NetworkParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Param(m));
        if !(self.alpha > 1.0) {
            return bad(format!("alpha must exceed 1, got {}", self.alpha));
        }
        if !(1 <= self.d_min && self.d_min < self.d_max && self.d_max < self.n) {
            return bad(format!(
                "need 1 <= d_min < d_max < n, got d_min={} d_max={} n={}",
                self.d_min, self.d_max, self.n
            ));
        }
        if !(self.nu > 0.0 && self.nu < 1.0) {
            return bad(format!("nu must lie in (0,1), got {}", self.nu));
        }
        if !(self.b > 0.0) {
            return bad(format!("B must be positive, got {}", self.b));
        }
        if !(self.cross_share > 0.0 && self.cross_share <= 0.5) {
            return bad(format!("cross_share must lie in (0, 0.5], got {}", self.cross_share));
        }
        if let Some(t) = self.tilt {
            if !t.is_finite() || t < 0.0 {
                return bad(format!("tilt must be finite and nonnegative, got {t}"));
            }
        }
        Ok(())
    }

    pub fn law(&self) -> TruncatedPareto {
        TruncatedPareto::new(self.alpha, self.d_min as f64, self.d_max as f64)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Economy {
    pub params: NetworkParams,
    pub degrees: Vec<usize>,
    pub sectors: Vec<u8>,
    /// Tilt exponent actually used for wiring.
    pub tilt: f64,
    pub adjacency: CscMatrix,
    /// q_i = d_i².
    pub quantities: Vec<f64>,
    pub stationary: Vec<f64>,
}

/// JSON snapshot layout.
#[derive(Serialize, Deserialize)]
struct Snapshot {
    params: NetworkParams,
    degrees: Vec<usize>,
    sectors: Vec<u8>,
    tilt: f64,
    col_ptr: Vec<usize>,
    row_idx: Vec<usize>,
    values: Vec<f64>,
    stationary: Vec<f64>,
}

pub fn quantity(d: usize) -> f64 {
    let d = d as f64;
    d * d
}

impl Economy {
    /// Wraps an explicit adjacency matrix. Computes q and the stationary vector.
    pub fn from_parts(
        params: NetworkParams,
        degrees: Vec<usize>,
        sectors: Vec<u8>,
        tilt: f64,
        adjacency: CscMatrix,
    ) -> Result<Self> {
        let n = adjacency.n;
        if degrees.len() != n || sectors.len() != n {
            return Err(Error::Param("degree/sector vectors do not match matrix size".into()));
        }
        if degrees.iter().any(|&d| d == 0) {
            return Err(Error::Param("zero degree gives zero quantity".into()));
        }
        let err = adjacency.stochasticity_error();
        if err > 1e-12 {
            return Err(Error::Param(format!("adjacency is not column-stochastic (max error {err:.3e})")));
        }
        let stationary = spectral::stationary_vector(&adjacency)?;
        let quantities = degrees.iter().map(|&d| quantity(d)).collect();
        Ok(Economy { params, degrees, sectors, tilt, adjacency, quantities, stationary })
    }

    pub fn n(&self) -> usize {
        self.adjacency.n
    }

    pub fn to_json(&self) -> Result<String> {
        let s = Snapshot {
            params: self.params.clone(),
            degrees: self.degrees.clone(),
            sectors: self.sectors.clone(),
            tilt: self.tilt,
            col_ptr: self.adjacency.col_ptr.clone(),
            row_idx: self.adjacency.row_idx.clone(),
            values: self.adjacency.values.clone(),
            stationary: self.stationary.clone(),
        };
        Ok(serde_json::to_string_pretty(&s)?)
    }

    /// Restores a snapshot without recomputing anything but q.
    pub fn from_json(text: &str) -> Result<Self> {
        let s: Snapshot = serde_json::from_str(text)?;
        let n = s.degrees.len();
        if s.col_ptr.len() != n + 1 || s.stationary.len() != n || s.sectors.len() != n {
            return Err(Error::Param("snapshot arrays have inconsistent lengths".into()));
        }
        if s.row_idx.len() != s.values.len() || s.col_ptr[n] != s.values.len() {
            return Err(Error::Param("snapshot CSC arrays are inconsistent".into()));
        }
        let adjacency = CscMatrix { n, col_ptr: s.col_ptr, row_idx: s.row_idx, values: s.values };
        let quantities = s.degrees.iter().map(|&d| quantity(d)).collect();
        Ok(Economy {
            params: s.params,
            degrees: s.degrees,
            sectors: s.sectors,
            tilt: s.tilt,
            adjacency,
            quantities,
            stationary: s.stationary,
        })
    }
}

/// i.i.d. truncated Pareto draws, rounded to the nearest integer and clamped.
/// Only the support bounds are checked, so d_min = d_max gives a point mass.
pub fn sample_degrees(params: &NetworkParams) -> Result<Vec<usize>> {
    if params.d_min < 1 || params.d_min > params.d_max {
        return Err(Error::Param(format!("invalid degree support [{}, {}]", params.d_min, params.d_max)));
    }
    if !(params.alpha > 1.0) {
        return Err(Error::Param(format!("alpha must exceed 1, got {}", params.alpha)));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    Ok(draw_degrees(params, &mut rng))
}

fn draw_degrees(params: &NetworkParams, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let law = params.law();
    (0..params.n)
        .map(|_| {
            let x = law.quantile(rng.random::<f64>()).round() as usize;
            x.clamp(params.d_min, params.d_max)
        })
        .collect()
}

/// E[d^s] under the continuous truncated Pareto law.
pub fn degree_moment(params: &NetworkParams, s: f64) -> f64 {
    params.law().moment(s)
}

/// Draws `k` distinct indices from `table`, never `exclude`. Rejection first,
/// exact exponential-key selection over the remainder if that stalls.
fn sample_distinct(
    table: &WeightedAliasIndex<f64>,
    weights: &[f64],
    k: usize,
    exclude: usize,
    rng: &mut ChaCha8Rng,
) -> Vec<usize> {
    let mut chosen: Vec<usize> = Vec::with_capacity(k);
    let mut attempts = 0;
    while chosen.len() < k && attempts < 64 * k + 64 {
        attempts += 1;
        let i = table.sample(rng);
        if i != exclude && !chosen.contains(&i) {
            chosen.push(i);
        }
    }
    if chosen.len() < k {
        let mut keys: Vec<(f64, usize)> = (0..weights.len())
            .filter(|&i| i != exclude && weights[i] > 0.0 && !chosen.contains(&i))
            .map(|i| (rng.random::<f64>().ln() / weights[i], i))
            .collect();
        keys.sort_by(|a, b| b.0.total_cmp(&a.0));
        chosen.extend(keys.into_iter().take(k - chosen.len()).map(|(_, i)| i));
    }
    chosen
}

/// Supplier lists per buyer: buyer j draws d_j distinct suppliers with
/// weight d_i^{1 − ν_w (ln d_j − mean ln d)}, split (1 − ε, ε) between its own
/// and the other sector.
fn wire(
    degrees: &[usize],
    sectors: &[u8],
    tilt: f64,
    cross_share: f64,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<Vec<usize>>> {
    let n = degrees.len();
    let logd: Vec<f64> = degrees.iter().map(|&d| (d as f64).ln()).collect();
    let center = logd.iter().sum::<f64>() / n as f64;
    let mut tables: HashMap<(usize, u8), (WeightedAliasIndex<f64>, Vec<f64>)> = HashMap::new();
    let mut suppliers = Vec::with_capacity(n);
    for j in 0..n {
        let key = (degrees[j], sectors[j]);
        if !tables.contains_key(&key) {
            let expo = 1.0 - tilt * (logd[j] - center);
            let raw: Vec<f64> = logd.iter().map(|l| (expo * l).exp()).collect();
            let mut mass = [0.0f64; 2];
            for (i, w) in raw.iter().enumerate() {
                mass[(sectors[i] == sectors[j]) as usize] += w;
            }
            let share = |same: bool| match (same, mass[0] > 0.0) {
                (true, true) => (1.0 - cross_share) / mass[1],
                (true, false) => 1.0 / mass[1],
                (false, _) => cross_share / mass[0],
            };
            let (s_other, s_same) = (share(false), share(true));
            let weights: Vec<f64> = raw
                .iter()
                .enumerate()
                .map(|(i, w)| w * if sectors[i] == sectors[j] { s_same } else { s_other })
                .collect();
            let table = WeightedAliasIndex::new(weights.clone())
                .map_err(|e| Error::Generation(format!("supplier weights rejected: {e}")))?;
            tables.insert(key, (table, weights));
        }
        let (table, weights) = &tables[&key];
        suppliers.push(sample_distinct(table, weights, degrees[j], j, rng));
    }
    Ok(suppliers)
}

/// Gives every firm at least one customer by swapping it in for the most
/// popular (≥ 2 customers) supplier of a random buyer. Degrees are unchanged.
fn cover_customers(
    suppliers: &mut [Vec<usize>],
    sectors: &[u8],
    cross_share: f64,
    rng: &mut ChaCha8Rng,
) -> Result<()> {
    let n = suppliers.len();
    let mut customers = vec![0usize; n];
    for list in suppliers.iter() {
        for &i in list {
            customers[i] += 1;
        }
    }
    let mut orphans: Vec<usize> = (0..n).filter(|&i| customers[i] == 0).collect();
    orphans.shuffle(rng);
    let budget = 1000 * n;
    for i in orphans {
        let mut placed = false;
        for _ in 0..budget {
            let j = rng.random_range(0..n);
            if j == i || suppliers[j].contains(&i) {
                continue;
            }
            if sectors[j] != sectors[i] && rng.random::<f64>() > cross_share {
                continue;
            }
            let best = suppliers[j]
                .iter()
                .enumerate()
                .filter(|(_, &s)| customers[s] >= 2)
                .max_by(|a, b| customers[*a.1].cmp(&customers[*b.1]).then(b.1.cmp(a.1)));
            if let Some((slot, &s)) = best {
                suppliers[j][slot] = i;
                customers[s] -= 1;
                customers[i] += 1;
                placed = true;
                break;
            }
        }
        if !placed {
            return Err(Error::Generation(format!("could not give firm {i} a customer")));
        }
    }
    Ok(())
}

fn to_matrix(suppliers: &[Vec<usize>]) -> CscMatrix {
    let n = suppliers.len();
    let cols = suppliers
        .iter()
        .map(|list| {
            let w = 1.0 / list.len() as f64;
            list.iter().map(|&i| (i, w)).collect()
        })
        .collect();
    CscMatrix::from_columns(n, cols)
}

/// Adds a cycle of weight-1e-6 edges through one representative per strongly
/// connected component, renormalizing columns, for up to three rounds.
fn repair(mut a: CscMatrix, rng: &mut ChaCha8Rng) -> Result<CscMatrix> {
    for _ in 0..REPAIR_ROUNDS {
        let labels = a.strong_components();
        let k = labels.iter().max().map_or(0, |m| m + 1);
        if k <= 1 {
            return Ok(a);
        }
        let mut reps = vec![usize::MAX; k];
        for (node, &c) in labels.iter().enumerate() {
            if reps[c] == usize::MAX {
                reps[c] = node;
            }
        }
        reps.shuffle(rng);
        let mut cols: Vec<Vec<(usize, f64)>> = (0..a.n).map(|j| a.column(j).collect()).collect();
        for w in 0..k {
            let buyer = reps[w];
            let supplier = reps[(w + 1) % k];
            cols[buyer].push((supplier, REPAIR_WEIGHT));
        }
        a = CscMatrix::from_columns(a.n, cols);
        a.normalize_columns();
    }
    if a.is_strongly_connected() {
        Ok(a)
    } else {
        let k = a.strong_components().iter().max().map_or(0, |m| m + 1);
        Err(Error::Generation(format!("{k} strongly connected components remain after {REPAIR_ROUNDS} repair rounds")))
    }
}

/// Two sectors with identical degree composition: each degree class is
/// shuffled and dealt alternately, starting from a random sector.
fn assign_sectors(degrees: &[usize], rng: &mut ChaCha8Rng) -> Vec<u8> {
    let mut classes: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
    for (i, &d) in degrees.iter().enumerate() {
        classes.entry(d).or_default().push(i);
    }
    let mut sectors = vec![0u8; degrees.len()];
    let mut next = rng.random_bool(0.5) as u8;
    for members in classes.values_mut() {
        members.shuffle(rng);
        for &i in members.iter() {
            sectors[i] = next;
            next ^= 1;
        }
    }
    sectors
}

fn wired_matrix(params: &NetworkParams, tilt: f64) -> Result<(Vec<usize>, Vec<u8>, CscMatrix)> {
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let degrees = draw_degrees(params, &mut rng);
    let sectors = assign_sectors(&degrees, &mut rng);
    let mut suppliers = wire(&degrees, &sectors, tilt, params.cross_share, &mut rng)?;
    cover_customers(&mut suppliers, &sectors, params.cross_share, &mut rng)?;
    let a = repair(to_matrix(&suppliers), &mut rng)?;
    Ok((degrees, sectors, a))
}

pub fn build_economy(params: &NetworkParams) -> Result<Economy> {
    params.validate()?;
    let tilt = match params.tilt {
        Some(t) => t,
        None => calibrate_tilt(params)?,
    };
    let (degrees, sectors, a) = wired_matrix(params, tilt)?;
    Economy::from_parts(params.clone(), degrees, sectors, tilt, a)
}

fn calibration_key(p: &NetworkParams) -> [u64; 6] {
    [p.n as u64, p.alpha.to_bits(), p.d_min as u64, p.d_max as u64, p.nu.to_bits(), p.cross_share.to_bits()]
}

fn calibration_seed(key: &[u64; 6]) -> u64 {
    // splitmix-style fold; independent of the draw seed.
    key.iter().fold(0x9e37_79b9_7f4a_7c15u64, |h, &x| {
        let mut z = h ^ x.wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 30)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^ (z >> 31)
    })
}

/// Realized k_nn slope averaged over the calibration draws at a given tilt.
pub fn calibration_slope(params: &NetworkParams, tilt: f64) -> Result<f64> {
    let base = calibration_seed(&calibration_key(params));
    let mut total = 0.0;
    for r in 0..CALIBRATION_DRAWS {
        let p = NetworkParams { seed: base.wrapping_add(r), ..params.clone() };
        let (degrees, _, a) = wired_matrix(&p, tilt)?;
        total += knn_slope_of(&degrees, &a).unwrap_or(0.0);
    }
    Ok(total / CALIBRATION_DRAWS as f64)
}

/// Bisection for ν_w so the realized k_nn slope of the calibration draws
/// equals −ν. Results are cached per parameter set (seed excluded).
pub fn calibrate_tilt(params: &NetworkParams) -> Result<f64> {
    static CACHE: OnceLock<Mutex<HashMap<[u64; 6], f64>>> = OnceLock::new();
    let key = calibration_key(params);
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(&t) = cache.lock().unwrap().get(&key) {
        return Ok(t);
    }
    params.validate()?;
    let (mut lo, mut hi) = TILT_BRACKET;
    for _ in 0..TILT_STEPS {
        let mid = 0.5 * (lo + hi);
        if calibration_slope(params, mid)? > -params.nu {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let t = 0.5 * (lo + hi);
    cache.lock().unwrap().insert(key, t);
    Ok(t)
}

fn mean_supplier_degree(degrees: &[usize], a: &CscMatrix, j: usize) -> f64 {
    let mut s = 0.0;
    let mut c = 0usize;
    for (i, _) in a.column(j) {
        if i != j {
            s += degrees[i] as f64;
            c += 1;
        }
    }
    if c == 0 {
        f64::NAN
    } else {
        s / c as f64
    }
}

/// Least-squares slope of ln(mean supplier degree) on ln(degree) across
/// firms. None without degree variation.
pub fn knn_slope_of(degrees: &[usize], a: &CscMatrix) -> Option<f64> {
    let pts: Vec<(f64, f64)> = (0..a.n)
        .map(|j| ((degrees[j] as f64).ln(), mean_supplier_degree(degrees, a, j).ln()))
        .filter(|(_, y)| y.is_finite())
        .collect();
    let m = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx < 1e-12 {
        return None;
    }
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    Some(sxy / sxx)
}

pub fn knn_slope(economy: &Economy) -> Option<f64> {
    knn_slope_of(&economy.degrees, &economy.adjacency)
}

/// Mean supplier degree per degree class, sorted by degree.
pub fn knn_profile(economy: &Economy) -> Vec<(usize, f64)> {
    let mut acc: std::collections::BTreeMap<usize, (f64, usize)> = Default::default();
    for j in 0..economy.n() {
        let k = mean_supplier_degree(&economy.degrees, &economy.adjacency, j);
        if k.is_finite() {
            let e = acc.entry(economy.degrees[j]).or_insert((0.0, 0));
            e.0 += k;
            e.1 += 1;
        }
    }
    acc.into_iter().map(|(d, (s, c))| (d, s / c as f64)).collect()
}
