//! Dense complex tensors with labeled legs, pairwise contraction, and
//! truncated singular value decomposition.

use std::sync::atomic::{AtomicU64, Ordering};

use ndarray::{Array1, Array2, ArrayD, IxDyn};
use ndarray_linalg::{JobSvd, SVDDCInto, SVDInto};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TensorError {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("invalid leg specification: {0}")]
    BadLegs(String),
    #[error("tensor data length {got} does not match shape product {want}")]
    DataLength { got: usize, want: usize },
    #[error("non-finite tensor entry")]
    NonFinite,
    #[error("invalid truncation policy: {0}")]
    BadPolicy(String),
    #[error("SVD failed to converge")]
    SvdFailure,
    #[error("linear algebra backend error: {0}")]
    Backend(String),
}

static NEXT_LEG: AtomicU64 = AtomicU64::new(1);

/// Opaque leg identifier used for contraction bookkeeping.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Leg(u64);

impl Leg {
    pub fn fresh() -> Self {
        Leg(NEXT_LEG.fetch_add(1, Ordering::Relaxed))
    }
}

/// Dense complex tensor stored in row-major order.
#[derive(Clone, Debug)]
pub struct Tensor {
    data: ArrayD<C64>,
    labels: Vec<Leg>,
}

impl Tensor {
    /// Build from a shape and a row-major data vector.
    pub fn new(shape: &[usize], data: Vec<C64>) -> Result<Self, TensorError> {
        let want: usize = shape.iter().product();
        if data.len() != want {
            return Err(TensorError::DataLength {
                got: data.len(),
                want,
            });
        }
        let arr = ArrayD::from_shape_vec(IxDyn(shape), data)
            .map_err(|e| TensorError::ShapeMismatch(e.to_string()))?;
        Ok(Self::from_array(arr))
    }

    pub fn from_array(data: ArrayD<C64>) -> Self {
        let labels = (0..data.ndim()).map(|_| Leg::fresh()).collect();
        let data = if data.is_standard_layout() {
            data
        } else {
            data.as_standard_layout().into_owned()
        };
        Self { data, labels }
    }

    pub fn scalar(v: C64) -> Self {
        Self::from_array(ArrayD::from_elem(IxDyn(&[]), v))
    }

    pub fn rank(&self) -> usize {
        self.data.ndim()
    }

    pub fn dims(&self) -> &[usize] {
        self.data.shape()
    }

    pub fn labels(&self) -> &[Leg] {
        &self.labels
    }

    pub fn with_labels(mut self, labels: Vec<Leg>) -> Result<Self, TensorError> {
        if labels.len() != self.rank() {
            return Err(TensorError::BadLegs(format!(
                "{} labels for rank-{} tensor",
                labels.len(),
                self.rank()
            )));
        }
        self.labels = labels;
        Ok(self)
    }

    pub fn data(&self) -> &ArrayD<C64> {
        &self.data
    }

    pub fn into_array(self) -> ArrayD<C64> {
        self.data
    }

    pub fn conj(&self) -> Self {
        Self {
            data: self.data.mapv(|v| v.conj()),
            labels: self.labels.clone(),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.re.is_finite() && v.im.is_finite())
    }

    /// Frobenius norm.
    pub fn norm(&self) -> f64 {
        self.data.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
    }
}

/// Contract tensors `a` and `b` over the given `(a_leg, b_leg)` position
/// pairs. Remaining legs are ordered as (a's free legs, then b's free legs);
/// leg labels follow their tensors.
pub fn contract(a: &Tensor, b: &Tensor, pairs: &[(usize, usize)]) -> Result<Tensor, TensorError> {
    let ra = a.rank();
    let rb = b.rank();
    let mut a_used = vec![false; ra];
    let mut b_used = vec![false; rb];
    for &(ia, ib) in pairs {
        if ia >= ra || ib >= rb {
            return Err(TensorError::BadLegs(format!(
                "pair ({ia}, {ib}) out of range for ranks ({ra}, {rb})"
            )));
        }
        if a_used[ia] || b_used[ib] {
            return Err(TensorError::BadLegs(format!(
                "leg used twice in contraction: ({ia}, {ib})"
            )));
        }
        if a.dims()[ia] != b.dims()[ib] {
            return Err(TensorError::ShapeMismatch(format!(
                "leg dimensions differ: a[{ia}] = {} vs b[{ib}] = {}",
                a.dims()[ia],
                b.dims()[ib]
            )));
        }
        a_used[ia] = true;
        b_used[ib] = true;
    }

    let a_free: Vec<usize> = (0..ra).filter(|&i| !a_used[i]).collect();
    let b_free: Vec<usize> = (0..rb).filter(|&i| !b_used[i]).collect();

    let mut perm_a: Vec<usize> = a_free.clone();
    perm_a.extend(pairs.iter().map(|&(ia, _)| ia));
    let mut perm_b: Vec<usize> = pairs.iter().map(|&(_, ib)| ib).collect();
    perm_b.extend(b_free.iter().copied());

    let m: usize = a_free.iter().map(|&i| a.dims()[i]).product();
    let k: usize = pairs.iter().map(|&(ia, _)| a.dims()[ia]).product();
    let n: usize = b_free.iter().map(|&i| b.dims()[i]).product();

    let am = a
        .data
        .view()
        .permuted_axes(IxDyn(&perm_a))
        .as_standard_layout()
        .into_owned()
        .into_shape((m, k))
        .map_err(|e| TensorError::ShapeMismatch(e.to_string()))?;
    let bm = b
        .data
        .view()
        .permuted_axes(IxDyn(&perm_b))
        .as_standard_layout()
        .into_owned()
        .into_shape((k, n))
        .map_err(|e| TensorError::ShapeMismatch(e.to_string()))?;

    let prod = am.dot(&bm);

    let mut out_dims: Vec<usize> = a_free.iter().map(|&i| a.dims()[i]).collect();
    out_dims.extend(b_free.iter().map(|&i| b.dims()[i]));
    let mut out_labels: Vec<Leg> = a_free.iter().map(|&i| a.labels[i]).collect();
    out_labels.extend(b_free.iter().map(|&i| b.labels[i]));

    let arr = prod
        .into_shape(IxDyn(&out_dims))
        .map_err(|e| TensorError::ShapeMismatch(e.to_string()))?;
    Tensor::from_array(arr).with_labels(out_labels)
}

/// Relative singular-value truncation policy.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TruncationPolicy {
    /// Keep singular values with σ_i/σ_max ≥ rel_cutoff (ties kept).
    pub rel_cutoff: f64,
    /// Hard cap on the kept rank, if set.
    pub max_bond: Option<usize>,
}

impl TruncationPolicy {
    pub fn new(rel_cutoff: f64) -> Self {
        Self {
            rel_cutoff,
            max_bond: None,
        }
    }

    /// Cutoff 10^exponent, e.g. exponent −6.5.
    pub fn from_exponent(exponent: f64) -> Self {
        Self::new(10f64.powf(exponent))
    }

    pub fn validate(&self) -> Result<(), TensorError> {
        if !(self.rel_cutoff >= 0.0 && self.rel_cutoff < 1.0) {
            return Err(TensorError::BadPolicy(format!(
                "rel_cutoff must be in [0, 1), got {}",
                self.rel_cutoff
            )));
        }
        if let Some(mb) = self.max_bond {
            if mb < 1 {
                return Err(TensorError::BadPolicy("max_bond must be >= 1".into()));
            }
        }
        Ok(())
    }
}

/// Outcome of a truncated SVD, m ≈ u · diag(s) · vt with `kept_rank` columns.
#[derive(Clone, Debug)]
pub struct SvdResult {
    pub u: Array2<C64>,
    pub s: Array1<f64>,
    pub vt: Array2<C64>,
    pub kept_rank: usize,
    /// sqrt(Σ discarded σ²)
    pub discarded_weight: f64,
    /// sqrt(Σ all σ²)
    pub total_weight: f64,
}

fn svd_parts(m: &Array2<C64>) -> Result<(Array2<C64>, Array1<f64>, Array2<C64>), TensorError> {
    // gesdd is substantially faster in the compression sweeps; fall back to
    // gesvd on the rare convergence failure.
    match m.clone().svddc_into(JobSvd::Some) {
        Ok((Some(u), s, Some(vt))) => Ok((u, s, vt)),
        _ => match m.clone().svd_into(true, true) {
            Ok((Some(u), s, Some(vt))) => Ok((u, s, vt)),
            Ok(_) => Err(TensorError::SvdFailure),
            Err(e) => Err(TensorError::Backend(e.to_string())),
        },
    }
}

/// Truncated SVD of a matrix under `policy`.
///
/// Singular values come out sorted descending. A zero matrix keeps rank 1
/// with σ = 0 by convention so downstream bonds never become empty.
pub fn truncated_svd(m: &Array2<C64>, policy: &TruncationPolicy) -> Result<SvdResult, TensorError> {
    policy.validate()?;
    let (rows, cols) = m.dim();
    if rows == 0 || cols == 0 {
        return Err(TensorError::ShapeMismatch("empty matrix in SVD".into()));
    }
    let (u, s, vt) = svd_parts(m)?;
    let smax = s.first().copied().unwrap_or(0.0);
    let total_sq: f64 = s.iter().map(|x| x * x).sum();

    let mut kept = if smax <= 0.0 {
        1
    } else {
        s.iter()
            .filter(|&&x| x / smax >= policy.rel_cutoff)
            .count()
            .max(1)
    };
    if let Some(mb) = policy.max_bond {
        kept = kept.min(mb);
    }
    kept = kept.min(s.len());

    let discarded_sq: f64 = s.iter().skip(kept).map(|x| x * x).sum();
    let u_k = u.slice(ndarray::s![.., ..kept]).to_owned();
    let s_k = s.slice(ndarray::s![..kept]).to_owned();
    let vt_k = vt.slice(ndarray::s![..kept, ..]).to_owned();

    Ok(SvdResult {
        u: u_k,
        s: s_k,
        vt: vt_k,
        kept_rank: kept,
        discarded_weight: discarded_sq.sqrt(),
        total_weight: total_sq.sqrt(),
    })
}

/// Truncated SVD of a tensor bipartitioned into `left_legs` (rows) and the
/// remaining legs (columns).
pub fn truncated_svd_split(
    t: &Tensor,
    left_legs: &[usize],
    policy: &TruncationPolicy,
) -> Result<(SvdResult, Vec<usize>, Vec<usize>), TensorError> {
    let r = t.rank();
    let mut used = vec![false; r];
    for &l in left_legs {
        if l >= r || used[l] {
            return Err(TensorError::BadLegs(format!("bad left leg {l}")));
        }
        used[l] = true;
    }
    let right: Vec<usize> = (0..r).filter(|&i| !used[i]).collect();
    let mut perm: Vec<usize> = left_legs.to_vec();
    perm.extend(right.iter().copied());
    let ldims: Vec<usize> = left_legs.iter().map(|&i| t.dims()[i]).collect();
    let rdims: Vec<usize> = right.iter().map(|&i| t.dims()[i]).collect();
    let m: usize = ldims.iter().product();
    let n: usize = rdims.iter().product();
    let mat = t
        .data
        .view()
        .permuted_axes(IxDyn(&perm))
        .as_standard_layout()
        .into_owned()
        .into_shape((m, n))
        .map_err(|e| TensorError::ShapeMismatch(e.to_string()))?;
    let svd = truncated_svd(&mat, policy)?;
    Ok((svd, ldims, rdims))
}
