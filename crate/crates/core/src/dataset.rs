//! Pose-pair containers, set statistics on SE(3) and file I/O.

use std::io::{Read, Write};
use std::path::Path;

use nalgebra::{Matrix3, Matrix6, SymmetricEigen, Vector3, Vector6};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::se3::{left_jacobian_unchecked, log_pose, screw_decompose, Pose, Rotation, Twist};

/// Rotation blocks read from files must be orthonormal to this tolerance.
pub const FILE_ROTATION_TOL: f64 = 1e-6;

/// One corresponding measurement: robot pose `A` and camera pose `B`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PosePair {
    #[serde(rename = "A")]
    pub a: Pose,
    #[serde(rename = "B")]
    pub b: Pose,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tag: Option<String>,
}

impl PosePair {
    pub fn new(a: Pose, b: Pose) -> Self {
        PosePair { a, b, tag: None }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PosePairSet {
    pub pairs: Vec<PosePair>,
}

impl PosePairSet {
    pub fn new(pairs: Vec<PosePair>) -> Self {
        PosePairSet { pairs }
    }

    pub fn from_poses(a: &[Pose], b: &[Pose]) -> Self {
        PosePairSet::new(a.iter().zip(b).map(|(a, b)| PosePair::new(*a, *b)).collect())
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn a_poses(&self) -> Vec<Pose> {
        self.pairs.iter().map(|p| p.a).collect()
    }

    pub fn b_poses(&self) -> Vec<Pose> {
        self.pairs.iter().map(|p| p.b).collect()
    }

    pub fn subset(&self, indices: &[usize]) -> Self {
        PosePairSet::new(indices.iter().map(|&i| self.pairs[i].clone()).collect())
    }

    pub fn require(&self, needed: usize) -> Result<()> {
        if self.len() < needed {
            return Err(Error::InsufficientData { needed, got: self.len() });
        }
        Ok(())
    }

    /// SHA-256 over the little-endian bytes of every pose entry, in order.
    pub fn digest(&self) -> String {
        let mut h = Sha256::new();
        for p in &self.pairs {
            for pose in [&p.a, &p.b] {
                for v in pose.r.matrix().transpose().iter().chain(pose.t.iter()) {
                    h.update(v.to_le_bytes());
                }
            }
        }
        hex::encode(h.finalize())
    }
}

/// Hex SHA-256 of raw bytes, used to tag outputs with their inputs.
pub fn content_digest(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Pairing {
    /// `(i, i+1)` for consecutive indices.
    #[default]
    Consecutive,
    /// Every ordered `(i, j)` with `i != j`.
    All,
}

/// Relative motions `a = A_j⁻¹ A_i`, `b = B_j⁻¹ B_i`, which satisfy `a X = X b`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RelativePair {
    pub a: Pose,
    pub b: Pose,
    pub i: usize,
    pub j: usize,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct RelativePairSet {
    pub rel_pairs: Vec<RelativePair>,
}

impl RelativePairSet {
    pub fn len(&self) -> usize {
        self.rel_pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rel_pairs.is_empty()
    }
}

fn relative(s: &PosePairSet, i: usize, j: usize) -> RelativePair {
    let (pi, pj) = (&s.pairs[i], &s.pairs[j]);
    RelativePair {
        a: pj.a.inverse() * pi.a,
        b: pj.b.inverse() * pi.b,
        i,
        j,
    }
}

pub fn make_relative_pairs(s: &PosePairSet, pairing: Pairing) -> Result<RelativePairSet> {
    s.require(2)?;
    let n = s.len();
    let rel_pairs = match pairing {
        Pairing::Consecutive => (0..n - 1).map(|i| relative(s, i, i + 1)).collect(),
        Pairing::All => (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| relative(s, i, j))
            .collect(),
    };
    Ok(RelativePairSet { rel_pairs })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Rejection {
    /// Position in the input relative set.
    pub index: usize,
    pub i: usize,
    pub j: usize,
    pub d_theta: f64,
    pub d_h: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct FilterReport {
    pub rejected: Vec<Rejection>,
}

/// Keeps relative pairs whose screw angle and translation along the screw
/// axis (`h θ`, in meters) agree between the two sensors. Conjugate motions
/// share both, so disagreement flags a mis-correspondence or a badly
/// corrupted sample. The axial translation is compared rather than the
/// pitch `h` itself because the threshold is a length and the pitch blows
/// up for small rotations.
pub fn correspondence_filter(
    r: &RelativePairSet,
    eps_theta: f64,
    eps_h: f64,
) -> Result<(RelativePairSet, FilterReport)> {
    if !(eps_theta > 0.0 && eps_h > 0.0) {
        return Err(Error::InvalidArgument("filter thresholds must be positive".into()));
    }
    let mut kept = Vec::with_capacity(r.len());
    let mut report = FilterReport::default();
    for (index, rp) in r.rel_pairs.iter().enumerate() {
        let sa = screw_decompose(&rp.a);
        let sb = screw_decompose(&rp.b);
        let d_theta = (sb.theta - sa.theta).abs();
        let d_h = (sb.h * sb.theta - sa.h * sa.theta).abs();
        if d_theta < eps_theta && d_h < eps_h {
            kept.push(*rp);
        } else {
            report.rejected.push(Rejection { index, i: rp.i, j: rp.j, d_theta, d_h });
        }
    }
    if kept.is_empty() {
        return Err(Error::EmptyAfterFilter);
    }
    Ok((RelativePairSet { rel_pairs: kept }, report))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MeanEstimate {
    pub mean: Pose,
    /// `‖(1/N) Σ log(M⁻¹ Aᵢ)‖` at the returned mean.
    pub residual: f64,
    pub iterations: usize,
    pub converged: bool,
}

fn mean_twist(poses: &[Pose], m_inv: &Pose) -> Result<(Vector6<f64>, Vec<Vector6<f64>>)> {
    let mut sum = Vector6::zeros();
    let mut logs = Vec::with_capacity(poses.len());
    for p in poses {
        let z = log_pose(&(*m_inv * *p))?.to_vector();
        sum += z;
        logs.push(z);
    }
    Ok((sum / poses.len() as f64, logs))
}

/// Iterative mean on SE(3): the pose `M` with `Σ log(M⁻¹ Aᵢ) = 0`.
///
/// The start point is the twist average of the cloud expressed relative to
/// its first element, which stays valid when the cloud itself sits far from
/// the identity. Each step solves the Jacobian-weighted normal equation for
/// a right-multiplied correction `M ← M exp(δ)`.
///
/// Non-convergence is reported through `converged = false` together with the
/// best iterate found.
pub fn se3_mean(poses: &[Pose], tol: f64, max_iter: usize) -> Result<MeanEstimate> {
    if poses.is_empty() {
        return Err(Error::InsufficientData { needed: 1, got: 0 });
    }
    let anchor = poses[0];
    let (z0, _) = mean_twist(poses, &anchor.inverse())?;
    let mut m = anchor * Pose::exp(&Twist::from_vector(&z0));
    let mut best = MeanEstimate {
        mean: m,
        residual: f64::INFINITY,
        iterations: 0,
        converged: false,
    };
    for it in 0..=max_iter {
        let (zbar, logs) = mean_twist(poses, &m.inverse())?;
        let residual = zbar.norm();
        if residual < best.residual {
            best = MeanEstimate { mean: m, residual, iterations: it, converged: false };
        }
        if residual < tol {
            best.converged = true;
            return Ok(best);
        }
        if it == max_iter {
            break;
        }
        let mut h = Matrix6::zeros();
        for z in &logs {
            let jl = left_jacobian_unchecked(&Twist::from_vector(z));
            h += jl.try_inverse().unwrap_or_else(Matrix6::identity);
        }
        let delta = h
            .lu()
            .solve(&(zbar * poses.len() as f64))
            .unwrap_or(zbar);
        m = m * Pose::exp(&Twist::from_vector(&delta));
    }
    best.iterations = max_iter;
    Ok(best)
}

/// `(1/n) Σ ξᵢ ξᵢᵀ` with `ξᵢ = log(M⁻¹ Aᵢ)`.
pub fn se3_covariance(poses: &[Pose], mean: &Pose) -> Result<Matrix6<f64>> {
    if poses.is_empty() {
        return Err(Error::InsufficientData { needed: 1, got: 0 });
    }
    let m_inv = mean.inverse();
    let mut c = Matrix6::zeros();
    for p in poses {
        let z = log_pose(&(m_inv * *p))?.to_vector();
        c += z * z.transpose();
    }
    c /= poses.len() as f64;
    Ok(0.5 * (c + c.transpose()))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SetStatistics {
    pub mean: Pose,
    pub cov: Matrix6<f64>,
    pub n: usize,
    pub mean_converged: bool,
}

pub const MEAN_TOL: f64 = 1e-12;
pub const MEAN_MAX_ITER: usize = 100;

pub fn set_statistics(poses: &[Pose]) -> Result<SetStatistics> {
    let m = se3_mean(poses, MEAN_TOL, MEAN_MAX_ITER)?;
    Ok(SetStatistics {
        mean: m.mean,
        cov: se3_covariance(poses, &m.mean)?,
        n: poses.len(),
        mean_converged: m.converged,
    })
}

/// `Σ^{-1/2}` of a symmetric PSD matrix. Eigenvalues below
/// `1e-12 · trace / 6` are raised to that floor; the flag reports whether
/// that happened.
pub fn inverse_sqrt_psd(cov: &Matrix6<f64>) -> Result<(Matrix6<f64>, bool)> {
    let trace = cov.trace();
    if !(trace > 0.0) || !trace.is_finite() {
        return Err(Error::NearSingularCovariance { trace });
    }
    let floor = 1e-12 * trace / 6.0;
    let eig = SymmetricEigen::new(0.5 * (cov + cov.transpose()));
    let mut floored = false;
    let d = eig.eigenvalues.map(|l| {
        if l < floor {
            floored = true;
            1.0 / floor.sqrt()
        } else {
            1.0 / l.sqrt()
        }
    });
    let q = eig.eigenvectors;
    Ok((q * Matrix6::from_diagonal(&d) * q.transpose(), floored))
}

#[derive(Clone, Debug, PartialEq)]
pub struct Whitened {
    pub psi: Vec<Vector6<f64>>,
    /// Some covariance eigenvalue was raised to the regularization floor.
    pub regularized: bool,
}

/// `ψᵢ = Σ^{-1/2} log(M⁻¹ Aᵢ)`.
pub fn whiten(poses: &[Pose], stats: &SetStatistics) -> Result<Whitened> {
    let (w, regularized) = inverse_sqrt_psd(&stats.cov)?;
    let m_inv = stats.mean.inverse();
    let psi = poses
        .iter()
        .map(|p| Ok(w * log_pose(&(m_inv * *p))?.to_vector()))
        .collect::<Result<Vec<_>>>()?;
    Ok(Whitened { psi, regularized })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FileFormat {
    Json,
    Csv,
}

impl FileFormat {
    /// Picks the format from the file extension; anything but `.csv` is JSON.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("csv") => FileFormat::Csv,
            _ => FileFormat::Json,
        }
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct LoadOptions {
    /// Project slightly non-orthonormal rotations onto SO(3) instead of
    /// rejecting them.
    pub reorthonormalize: bool,
}

fn validate_pose(p: Pose, record: usize, opts: LoadOptions) -> Result<Pose> {
    if !p.is_finite() {
        return Err(Error::Validation { record, message: "non-finite entry".into() });
    }
    let m = *p.r.matrix();
    let err = p.r.orthonormality_error();
    let det = m.determinant();
    if err <= FILE_ROTATION_TOL && (det - 1.0).abs() <= FILE_ROTATION_TOL {
        return Ok(p);
    }
    if opts.reorthonormalize && det > 0.0 {
        return Ok(Pose::new(Rotation::project(&m), p.t));
    }
    Err(Error::Validation {
        record,
        message: format!("rotation not orthonormal (error {err:.3e}, det {det:.9})"),
    })
}

fn validate_pair(p: PosePair, record: usize, opts: LoadOptions) -> Result<PosePair> {
    Ok(PosePair {
        a: validate_pose(p.a, record, opts)?,
        b: validate_pose(p.b, record, opts)?,
        tag: p.tag,
    })
}

pub fn parse_json(text: &str, opts: LoadOptions) -> Result<PosePairSet> {
    let v: serde_json::Value = serde_json::from_str(text)
        .map_err(|e| Error::Format { record: 0, message: e.to_string() })?;
    let records = v
        .get("pairs")
        .and_then(|p| p.as_array())
        .ok_or_else(|| Error::Format { record: 0, message: "missing \"pairs\" array".into() })?;
    let pairs = records
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let p: PosePair = serde_json::from_value(r.clone())
                .map_err(|e| Error::Format { record: i, message: e.to_string() })?;
            validate_pair(p, i, opts)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(PosePairSet::new(pairs))
}

pub fn to_json(s: &PosePairSet) -> String {
    serde_json::to_string_pretty(s).expect("pose pairs serialize")
}

const CSV_HEADER: [&str; 24] = [
    "ra11", "ra12", "ra13", "ra21", "ra22", "ra23", "ra31", "ra32", "ra33", "ta1", "ta2", "ta3",
    "rb11", "rb12", "rb13", "rb21", "rb22", "rb23", "rb31", "rb32", "rb33", "tb1", "tb2", "tb3",
];

fn pose_from_slice(v: &[f64]) -> Pose {
    Pose::new(
        Rotation::from_matrix_unchecked(Matrix3::from_row_slice(&v[..9])),
        Vector3::new(v[9], v[10], v[11]),
    )
}

pub fn parse_csv<R: Read>(reader: R, opts: LoadOptions) -> Result<PosePairSet> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(reader);
    let mut pairs = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| Error::Format { record: i, message: e.to_string() })?;
        if rec.len() != 24 {
            return Err(Error::Format {
                record: i,
                message: format!("expected 24 columns, found {}", rec.len()),
            });
        }
        let vals = rec
            .iter()
            .map(|f| f.parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| Error::Format { record: i, message: e.to_string() })?;
        let p = PosePair::new(pose_from_slice(&vals[..12]), pose_from_slice(&vals[12..]));
        pairs.push(validate_pair(p, i, opts)?);
    }
    Ok(PosePairSet::new(pairs))
}

pub fn write_csv<W: Write>(s: &PosePairSet, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let io = |e: csv::Error| Error::Io(std::io::Error::other(e));
    w.write_record(CSV_HEADER).map_err(io)?;
    for p in &s.pairs {
        let mut row = Vec::with_capacity(24);
        for pose in [&p.a, &p.b] {
            let m = pose.r.matrix();
            for i in 0..3 {
                for j in 0..3 {
                    row.push(m[(i, j)].to_string());
                }
            }
            row.extend(pose.t.iter().map(|v| v.to_string()));
        }
        w.write_record(&row).map_err(io)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a settings file as TOML when the extension is `.toml` and as
/// JSON otherwise.
pub fn read_structured<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path)?;
    let fmt = |e: String| Error::Format { record: 0, message: e };
    if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("toml")) {
        toml::from_str(&text).map_err(|e| fmt(e.to_string()))
    } else {
        serde_json::from_str(&text).map_err(|e| fmt(e.to_string()))
    }
}

pub fn load_pairs(path: &Path, format: FileFormat, opts: LoadOptions) -> Result<PosePairSet> {
    match format {
        FileFormat::Json => parse_json(&std::fs::read_to_string(path)?, opts),
        FileFormat::Csv => parse_csv(std::fs::File::open(path)?, opts),
    }
}

pub fn save_pairs(s: &PosePairSet, path: &Path, format: FileFormat) -> Result<()> {
    match format {
        FileFormat::Json => std::fs::write(path, to_json(s))?,
        FileFormat::Csv => write_csv(s, std::fs::File::create(path)?)?,
    }
    Ok(())
}
