//! Radially symmetric two-class datasets with an exact class-probability oracle.
//!
//! Class `j` draws its radius from Gamma(αⱼ, ηⱼ) (shape, scale) and its polar
//! angle uniformly, so the class-2 probability at a point depends on the
//! radius only:
//!
//! ```text
//! P(c²|r) = p(r|c²)P(c²) / (p(r|c¹)P(c¹) + p(r|c²)P(c²))
//! ```
//!
//! Everything here is evaluated in log-density space; on the out-of-distribution
//! grid (r ≈ 10³) both linear-space densities underflow.

use std::f64::consts::{PI, TAU};
use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{self, fnv1a64};
use crate::special::ln_gamma;

/// Training-subset sizes of the study.
pub const STUDY_TRAIN_SIZES: [usize; 7] = [250, 500, 1000, 2000, 3000, 5000, 10000];
pub const TRAIN_POOL: usize = 10_000;
pub const VALIDATION_SIZE: usize = 5_000;
pub const TEST_SIZE: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Class {
    One,
    Two,
}

impl Class {
    /// 1 for class 1, 2 for class 2.
    pub fn number(self) -> u8 {
        match self {
            Class::One => 1,
            Class::Two => 2,
        }
    }

    pub fn from_number(n: u8) -> Result<Self> {
        match n {
            1 => Ok(Class::One),
            2 => Ok(Class::Two),
            other => Err(Error::Malformed(format!("class label {other} is not 1 or 2"))),
        }
    }

    pub fn index(self) -> usize {
        match self {
            Class::One => 0,
            Class::Two => 1,
        }
    }

    pub fn one_hot(self) -> [f64; 2] {
        match self {
            Class::One => [1.0, 0.0],
            Class::Two => [0.0, 1.0],
        }
    }

    pub fn is_two(self) -> bool {
        self == Class::Two
    }

    pub fn other(self) -> Self {
        match self {
            Class::One => Class::Two,
            Class::Two => Class::One,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LabeledPoint {
    pub x1: f64,
    pub x2: f64,
    pub label: Class,
}

impl LabeledPoint {
    pub fn new(x1: f64, x2: f64, label: Class) -> Self {
        Self { x1, x2, label }
    }

    pub fn radius(&self) -> f64 {
        self.x1.hypot(self.x2)
    }

    pub fn coords(&self) -> [f64; 2] {
        [self.x1, self.x2]
    }
}

pub fn coords_of(points: &[LabeledPoint]) -> Vec<[f64; 2]> {
    points.iter().map(LabeledPoint::coords).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DatasetId {
    A,
    B,
    /// Both classes share dataset A's class-2 distribution.
    C,
}

impl DatasetId {
    pub const ALL: [DatasetId; 3] = [DatasetId::A, DatasetId::B, DatasetId::C];

    pub fn spec(self) -> GammaClassSpec {
        let (a1, e1, a2, e2) = match self {
            DatasetId::A => (2.0, 5.0, 6.0, 3.0),
            DatasetId::B => (2.0, 3.0, 4.0, 3.0),
            DatasetId::C => (6.0, 3.0, 6.0, 3.0),
        };
        GammaClassSpec {
            alpha1: a1,
            eta1: e1,
            alpha2: a2,
            eta2: e2,
            prior1: 0.5,
            prior2: 0.5,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            DatasetId::A => "A",
            DatasetId::B => "B",
            DatasetId::C => "C",
        }
    }
}

impl std::fmt::Display for DatasetId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for DatasetId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "A" => Ok(DatasetId::A),
            "B" => Ok(DatasetId::B),
            "C" => Ok(DatasetId::C),
            other => Err(Error::Malformed(format!("unknown dataset '{other}'"))),
        }
    }
}

/// Per-class gamma shape/scale and class marginals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GammaClassSpec {
    pub alpha1: f64,
    pub eta1: f64,
    pub alpha2: f64,
    pub eta2: f64,
    pub prior1: f64,
    pub prior2: f64,
}

impl GammaClassSpec {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("alpha1", self.alpha1),
            ("eta1", self.eta1),
            ("alpha2", self.alpha2),
            ("eta2", self.eta2),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::param(format!("{name} must be finite and positive, got {v}")));
            }
        }
        let priors_ok = (0.0..=1.0).contains(&self.prior1)
            && (0.0..=1.0).contains(&self.prior2)
            && (self.prior1 + self.prior2 - 1.0).abs() < 1e-12;
        if !priors_ok {
            return Err(Error::param(format!(
                "class priors must lie in [0,1] and sum to 1, got {} and {}",
                self.prior1, self.prior2
            )));
        }
        Ok(())
    }

    fn shape_scale(&self, class: Class) -> (f64, f64) {
        match class {
            Class::One => (self.alpha1, self.eta1),
            Class::Two => (self.alpha2, self.eta2),
        }
    }

    fn prior(&self, class: Class) -> f64 {
        match class {
            Class::One => self.prior1,
            Class::Two => self.prior2,
        }
    }
}

fn check_shape_scale(alpha: f64, eta: f64) -> Result<()> {
    if !(alpha.is_finite() && alpha > 0.0 && eta.is_finite() && eta > 0.0) {
        return Err(Error::param(format!(
            "gamma shape and scale must be finite and positive, got ({alpha}, {eta})"
        )));
    }
    Ok(())
}

/// Log-density of Gamma(α, η) at `r`; `-inf` where the density is zero.
pub fn gamma_log_pdf(r: f64, alpha: f64, eta: f64) -> Result<f64> {
    check_shape_scale(alpha, eta)?;
    if !(r >= 0.0) || !r.is_finite() {
        return Err(Error::param(format!("radius must be finite and non-negative, got {r}")));
    }
    let power = if alpha == 1.0 {
        0.0
    } else if r == 0.0 {
        if alpha > 1.0 {
            return Ok(f64::NEG_INFINITY);
        }
        return Ok(f64::INFINITY);
    } else {
        (alpha - 1.0) * r.ln()
    };
    Ok(power - r / eta - ln_gamma(alpha) - alpha * eta.ln())
}

/// Density r^(α−1) e^(−r/η) / (Γ(α) η^α).
pub fn gamma_pdf(r: f64, alpha: f64, eta: f64) -> Result<f64> {
    gamma_log_pdf(r, alpha, eta).map(f64::exp)
}

/// Class-2 probability together with a flag telling whether both
/// linear-space densities underflow at this radius.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Lrfd {
    pub class2: f64,
    pub underflow: bool,
}

pub fn lrfd_detailed(r: f64, spec: &GammaClassSpec) -> Result<Lrfd> {
    spec.validate()?;
    if !(r >= 0.0) || !r.is_finite() {
        return Err(Error::param(format!("radius must be finite and non-negative, got {r}")));
    }
    let (a1, e1) = spec.shape_scale(Class::One);
    let (a2, e2) = spec.shape_scale(Class::Two);
    let log_prior = |c: Class| spec.prior(c).ln();

    // log[p(r|c¹)P(c¹)] - log[p(r|c²)P(c²)]; the ln r terms are combined so
    // that r = 0 resolves to the shape-dominance limit.
    let shape_term = if a1 == a2 {
        0.0
    } else if r == 0.0 {
        if a1 < a2 {
            f64::INFINITY
        } else {
            f64::NEG_INFINITY
        }
    } else {
        (a1 - a2) * r.ln()
    };
    let rest = -r / e1 + r / e2 - ln_gamma(a1) + ln_gamma(a2) - a1 * e1.ln() + a2 * e2.ln()
        + log_prior(Class::One)
        - log_prior(Class::Two);
    let log_ratio = shape_term + rest;

    let class2 = if log_ratio.is_nan() {
        // both priors zero cannot happen after validation; inf - inf from
        // a degenerate prior is the only remaining source
        0.5
    } else {
        crate::special::sigmoid(-log_ratio)
    };
    let underflow = gamma_pdf(r, a1, e1)? * spec.prior1 == 0.0 && gamma_pdf(r, a2, e2)? * spec.prior2 == 0.0;
    Ok(Lrfd { class2, underflow })
}

/// P(c² = 1 | r) for the generator `spec`.
pub fn lrfd(r: f64, spec: &GammaClassSpec) -> Result<f64> {
    lrfd_detailed(r, spec).map(|l| l.class2)
}

pub fn lrfd_at(point: [f64; 2], spec: &GammaClassSpec) -> Result<f64> {
    lrfd(point[0].hypot(point[1]), spec)
}

/// Bayes decision: class 2 iff its probability exceeds 1/2.
pub fn bayes_classify(point: [f64; 2], spec: &GammaClassSpec) -> Result<Class> {
    Ok(if lrfd_at(point, spec)? > 0.5 { Class::Two } else { Class::One })
}

fn sample_point<R: Rng + ?Sized>(rng: &mut R, spec: &GammaClassSpec) -> LabeledPoint {
    let label = if rng.random::<f64>() < spec.prior1 { Class::One } else { Class::Two };
    let (alpha, eta) = spec.shape_scale(label);
    let r = rng::gamma(rng, alpha, eta);
    let phi = rng.random::<f64>() * TAU;
    LabeledPoint::new(r * phi.cos(), r * phi.sin(), label)
}

/// Draws `n` labelled points; deterministic given `seed`.
pub fn sample_dataset(spec: &GammaClassSpec, n: usize, seed: u64) -> Result<Vec<LabeledPoint>> {
    spec.validate()?;
    if n == 0 {
        return Err(Error::param("sample size must be at least 1"));
    }
    let mut rng = rng::seeded(seed);
    Ok((0..n).map(|_| sample_point(&mut rng, spec)).collect())
}

/// Polar evaluation grid far outside the training distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct OodGrid {
    pub angles: Vec<f64>,
    pub radii: Vec<f64>,
    /// Angle-major: all radii for angle 0, then angle 1, ...
    pub points: Vec<OodPoint>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OodPoint {
    pub x1: f64,
    pub x2: f64,
    pub r: f64,
    pub phi: f64,
}

impl OodPoint {
    pub fn coords(&self) -> [f64; 2] {
        [self.x1, self.x2]
    }
}

impl OodGrid {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn coords(&self) -> Vec<[f64; 2]> {
        self.points.iter().map(OodPoint::coords).collect()
    }
}

pub const OOD_ANGLES: usize = 5;
pub const OOD_RADII: usize = 26;
pub const OOD_R_MIN: f64 = 700.0;
pub const OOD_R_MAX: f64 = 1000.0;

/// 5 polar angles (multiples of 2π/5) × 26 log-equispaced radii in [700, 1000].
pub fn make_ood_grid() -> OodGrid {
    let angles: Vec<f64> = (0..OOD_ANGLES).map(|k| 2.0 * PI * k as f64 / OOD_ANGLES as f64).collect();
    let (lo, hi) = (OOD_R_MIN.ln(), OOD_R_MAX.ln());
    let step = (hi - lo) / (OOD_RADII - 1) as f64;
    let radii: Vec<f64> = (0..OOD_RADII)
        .map(|i| match i {
            0 => OOD_R_MIN,
            i if i == OOD_RADII - 1 => OOD_R_MAX,
            i => (lo + step * i as f64).exp(),
        })
        .collect();
    let points = angles
        .iter()
        .flat_map(|&phi| {
            radii.iter().map(move |&r| OodPoint {
                x1: r * phi.cos(),
                x2: r * phi.sin(),
                r,
                phi,
            })
        })
        .collect();
    OodGrid { angles, radii, points }
}

/// Nested prefixes of `train` for each requested size.
pub fn training_subsets<'a>(train: &'a [LabeledPoint], sizes: &[usize]) -> Result<Vec<&'a [LabeledPoint]>> {
    sizes
        .iter()
        .map(|&s| {
            if s == 0 {
                Err(Error::param("subset size must be positive"))
            } else if s > train.len() {
                Err(Error::InsufficientData {
                    requested: s,
                    available: train.len(),
                })
            } else {
                Ok(&train[..s])
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitSizes {
    pub train: usize,
    pub validation: usize,
    pub test: usize,
}

impl Default for SplitSizes {
    fn default() -> Self {
        Self {
            train: TRAIN_POOL,
            validation: VALIDATION_SIZE,
            test: TEST_SIZE,
        }
    }
}

/// Train/validation/test splits of one dataset.
#[derive(Debug, Clone)]
pub struct DatasetSplits {
    pub id: DatasetId,
    pub spec: GammaClassSpec,
    pub seed: u64,
    pub sizes: SplitSizes,
    /// Shuffled once; study subsets are prefixes of this vector.
    pub train: Vec<LabeledPoint>,
    pub validation: Vec<LabeledPoint>,
    pub test: Vec<LabeledPoint>,
}

impl DatasetSplits {
    pub fn generate(id: DatasetId, seed: u64, sizes: SplitSizes) -> Result<Self> {
        let spec = id.spec();
        let mut train = sample_dataset(&spec, sizes.train, rng::derive_seed(seed, "train"))?;
        train.shuffle(&mut rng::stream(seed, "shuffle"));
        let validation = sample_dataset(&spec, sizes.validation, rng::derive_seed(seed, "validation"))?;
        let test = sample_dataset(&spec, sizes.test, rng::derive_seed(seed, "test"))?;
        Ok(Self {
            id,
            spec,
            seed,
            sizes,
            train,
            validation,
            test,
        })
    }

    pub fn manifest(&self) -> DatasetManifest {
        DatasetManifest::new(self.id, self.spec, self.seed, self.sizes)
    }

    /// Writes `train.csv`, `validation.csv`, `test.csv`, `ood_grid.csv` and
    /// `manifest.json` into `dir`.
    pub fn write_dir(&self, dir: &Path) -> Result<DatasetManifest> {
        fs::create_dir_all(dir)?;
        write_points_csv(&dir.join("train.csv"), &self.train)?;
        write_points_csv(&dir.join("validation.csv"), &self.validation)?;
        write_points_csv(&dir.join("test.csv"), &self.test)?;
        write_ood_csv(&dir.join("ood_grid.csv"), &make_ood_grid())?;
        let manifest = self.manifest();
        fs::write(dir.join("manifest.json"), serde_json::to_string_pretty(&manifest)?)?;
        Ok(manifest)
    }

    pub fn read_dir(dir: &Path) -> Result<Self> {
        let manifest = DatasetManifest::read(&dir.join("manifest.json"))?;
        let train = read_points_csv(&dir.join("train.csv"))?;
        let validation = read_points_csv(&dir.join("validation.csv"))?;
        let test = read_points_csv(&dir.join("test.csv"))?;
        let sizes = SplitSizes {
            train: train.len(),
            validation: validation.len(),
            test: test.len(),
        };
        if sizes != manifest.sizes {
            return Err(Error::Malformed(format!(
                "split sizes {sizes:?} disagree with manifest {:?}",
                manifest.sizes
            )));
        }
        Ok(Self {
            id: manifest.dataset,
            spec: manifest.spec,
            seed: manifest.seed,
            sizes,
            train,
            validation,
            test,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub dataset: DatasetId,
    pub spec: GammaClassSpec,
    pub seed: u64,
    pub sizes: SplitSizes,
    pub nested_subset_sizes: Vec<usize>,
    pub subset_rule: String,
    pub ood_grid: OodGridManifest,
    pub fingerprint: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OodGridManifest {
    pub angles: usize,
    pub radii: usize,
    pub r_min: f64,
    pub r_max: f64,
}

impl DatasetManifest {
    pub fn new(dataset: DatasetId, spec: GammaClassSpec, seed: u64, sizes: SplitSizes) -> Self {
        let fingerprint = dataset_fingerprint(dataset, &spec, seed, sizes);
        Self {
            dataset,
            spec,
            seed,
            sizes,
            nested_subset_sizes: STUDY_TRAIN_SIZES.iter().copied().filter(|&s| s <= sizes.train).collect(),
            subset_rule: "training pool sampled with stream 'train', shuffled once (Fisher-Yates, stream 'shuffle'); subset of size s is its first s points".into(),
            ood_grid: OodGridManifest {
                angles: OOD_ANGLES,
                radii: OOD_RADII,
                r_min: OOD_R_MIN,
                r_max: OOD_R_MAX,
            },
            fingerprint,
        }
    }

    pub fn read(path: &Path) -> Result<Self> {
        if !path.exists() {
            return Err(Error::MissingFile(path.to_path_buf()));
        }
        let manifest: Self = serde_json::from_str(&fs::read_to_string(path)?)?;
        let expected = dataset_fingerprint(manifest.dataset, &manifest.spec, manifest.seed, manifest.sizes);
        if expected != manifest.fingerprint {
            return Err(Error::FingerprintMismatch {
                expected,
                found: manifest.fingerprint,
            });
        }
        Ok(manifest)
    }
}

pub fn dataset_fingerprint(dataset: DatasetId, spec: &GammaClassSpec, seed: u64, sizes: SplitSizes) -> String {
    let canonical = serde_json::json!({
        "dataset": dataset,
        "spec": spec,
        "seed": seed,
        "sizes": sizes,
    });
    format!("{:016x}", fnv1a64(canonical.to_string().as_bytes()))
}

#[derive(Debug, Serialize, Deserialize)]
struct PointRow {
    x1: f64,
    x2: f64,
    class: u8,
}

pub fn write_points_csv(path: &Path, points: &[LabeledPoint]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for p in points {
        w.serialize(PointRow {
            x1: p.x1,
            x2: p.x2,
            class: p.label.number(),
        })?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_points_csv(path: &Path) -> Result<Vec<LabeledPoint>> {
    if !path.exists() {
        return Err(Error::MissingFile(path.to_path_buf()));
    }
    let mut r = csv::Reader::from_path(path)?;
    let headers = r.headers()?.clone();
    if headers.iter().collect::<Vec<_>>() != ["x1", "x2", "class"] {
        return Err(Error::Malformed(format!(
            "{}: expected header x1,x2,class",
            path.display()
        )));
    }
    r.deserialize::<PointRow>()
        .map(|row| {
            let row = row?;
            Ok(LabeledPoint::new(row.x1, row.x2, Class::from_number(row.class)?))
        })
        .collect()
}

pub fn write_ood_csv(path: &Path, grid: &OodGrid) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for p in &grid.points {
        w.serialize(p)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_ood_csv(path: &Path) -> Result<Vec<OodPoint>> {
    if !path.exists() {
        return Err(Error::MissingFile(path.to_path_buf()));
    }
    let mut r = csv::Reader::from_path(path)?;
    Ok(r.deserialize().collect::<Result<_, _>>()?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec_a() -> GammaClassSpec {
        DatasetId::A.spec()
    }

    #[test]
    fn gamma_pdf_examples() {
        // 5 e^-1 / 25
        let expected = 5.0 * (-1.0f64).exp() / 25.0;
        assert!((gamma_pdf(5.0, 2.0, 5.0).unwrap() - expected).abs() < 1e-15);
        assert!((expected - 0.073576).abs() < 1e-6);
        assert_eq!(gamma_pdf(0.0, 2.0, 5.0).unwrap(), 0.0);
        assert!((gamma_pdf(1.0, 1.0, 1.0).unwrap() - (-1.0f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn gamma_pdf_rejects_bad_parameters() {
        assert!(gamma_pdf(1.0, 0.0, 1.0).is_err());
        assert!(gamma_pdf(1.0, 2.0, -1.0).is_err());
        assert!(gamma_pdf(1.0, f64::NAN, 1.0).is_err());
        assert!(gamma_pdf(1.0, 2.0, f64::INFINITY).is_err());
        assert!(gamma_pdf(-1.0, 2.0, 1.0).is_err());
    }

    #[test]
    fn lrfd_examples() {
        // independent evaluation of the two gamma densities in linear space
        let p = lrfd(10.0, &spec_a()).unwrap();
        let d1 = 10.0 * (-2.0f64).exp() / 25.0;
        let d2 = 1e5 * (-10.0f64 / 3.0).exp() / (120.0 * 729.0);
        assert!((p - d2 / (d1 + d2)).abs() < 1e-13, "{p}");
        assert!((p - 0.42965).abs() < 1e-5, "{p}");
        for r in [0.0, 1.0, 17.0, 900.0] {
            assert_eq!(lrfd(r, &DatasetId::C.spec()).unwrap(), 0.5);
        }
        assert_eq!(lrfd(0.0, &spec_a()).unwrap(), 0.0);
    }

    #[test]
    fn lrfd_deep_tail_flags_underflow_but_stays_finite() {
        // the OOD radii still have representable densities; r = 5000 does not
        assert!(!lrfd_detailed(1000.0, &spec_a()).unwrap().underflow);
        let l = lrfd_detailed(5000.0, &spec_a()).unwrap();
        assert!(l.underflow);
        // class 1 has the larger scale, so it dominates the far tail
        assert!(l.class2 < 1e-10);
        assert!(!lrfd_detailed(10.0, &spec_a()).unwrap().underflow);
    }

    #[test]
    fn ood_grid_layout() {
        let g = make_ood_grid();
        assert_eq!(g.len(), 130);
        assert_eq!(g.radii[0], 700.0);
        assert_eq!(g.radii[25], 1000.0);
        assert!((g.radii[1] - 700.0 * (1000.0f64 / 700.0).powf(1.0 / 25.0)).abs() < 1e-9);
        assert!((g.radii[1] - 710.05).abs() < 0.01);
        let ratio = g.radii[1] / g.radii[0];
        for w in g.radii.windows(2) {
            assert!(w[1] > w[0]);
            assert!((w[1] / w[0] - ratio).abs() < 1e-12);
        }
        assert_eq!(g.angles.len(), 5);
        assert!((g.angles[4] - 8.0 * PI / 5.0).abs() < 1e-15);
    }

    #[test]
    fn subsets_are_nested_prefixes() {
        let train = sample_dataset(&spec_a(), 10_000, 1).unwrap();
        let subs = training_subsets(&train, &STUDY_TRAIN_SIZES).unwrap();
        assert_eq!(subs.len(), 7);
        assert_eq!(subs[6], &train[..]);
        assert_eq!(&subs[1][..250], subs[0]);
        let small = &train[..5000];
        assert!(matches!(
            training_subsets(small, &STUDY_TRAIN_SIZES),
            Err(Error::InsufficientData { requested: 10000, available: 5000 })
        ));
    }

    #[test]
    fn sampling_is_deterministic() {
        let a = sample_dataset(&spec_a(), 100, 9).unwrap();
        let b = sample_dataset(&spec_a(), 100, 9).unwrap();
        assert_eq!(a, b);
        assert_eq!(sample_dataset(&spec_a(), 1, 9).unwrap().len(), 1);
        assert!(sample_dataset(&spec_a(), 0, 9).is_err());
    }

    #[test]
    fn class_frequencies_near_half() {
        let pts = sample_dataset(&spec_a(), 10_000, 4).unwrap();
        let twos = pts.iter().filter(|p| p.label.is_two()).count() as f64;
        let sigma = (10_000.0 * 0.25f64).sqrt();
        assert!((twos - 5000.0).abs() < 3.0 * sigma);
    }

    #[test]
    fn spec_validation() {
        let mut s = spec_a();
        s.prior1 = 0.7;
        assert!(s.validate().is_err());
        s.prior1 = 0.5;
        s.alpha1 = 0.0;
        assert!(s.validate().is_err());
    }
}
