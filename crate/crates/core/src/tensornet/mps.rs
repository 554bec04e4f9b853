//! Matrix product states over complex site tensors with (left-bond, physical,
//! right-bond) legs, plus the column-MPO application and compression sweeps
//! that grow a process tensor one time slot at a time.

use ndarray::{s, Array1, Array2, Array3, Array4};
use ndarray_linalg::QR;
use num_complex::Complex64 as C64;

use super::tensor::{truncated_svd, TensorError, TruncationPolicy};

/// Matrix product state; site tensors have legs (left bond, physical, right
/// bond) with boundary bonds of dimension 1.
#[derive(Clone, Debug)]
pub struct MatrixProductState {
    tensors: Vec<Array3<C64>>,
}

impl MatrixProductState {
    pub fn new(tensors: Vec<Array3<C64>>) -> Result<Self, TensorError> {
        if let Some(first) = tensors.first() {
            if first.dim().0 != 1 {
                return Err(TensorError::ShapeMismatch(
                    "left boundary bond must have dimension 1".into(),
                ));
            }
        }
        if let Some(last) = tensors.last() {
            if last.dim().2 != 1 {
                return Err(TensorError::ShapeMismatch(
                    "right boundary bond must have dimension 1".into(),
                ));
            }
        }
        for (i, w) in tensors.windows(2).enumerate() {
            if w[0].dim().2 != w[1].dim().0 {
                return Err(TensorError::ShapeMismatch(format!(
                    "bond mismatch between sites {} and {}: {} vs {}",
                    i,
                    i + 1,
                    w[0].dim().2,
                    w[1].dim().0
                )));
            }
        }
        Ok(Self { tensors })
    }

    pub fn empty() -> Self {
        Self {
            tensors: Vec::new(),
        }
    }

    /// Product state from one vector per site (all bonds dimension 1).
    pub fn from_site_vectors(vectors: &[Array1<C64>]) -> Self {
        let tensors = vectors
            .iter()
            .map(|v| {
                Array3::from_shape_vec((1, v.len(), 1), v.to_vec()).expect("shape is consistent")
            })
            .collect();
        Self { tensors }
    }

    pub fn len(&self) -> usize {
        self.tensors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tensors.is_empty()
    }

    pub fn tensors(&self) -> &[Array3<C64>] {
        &self.tensors
    }

    pub fn into_tensors(self) -> Vec<Array3<C64>> {
        self.tensors
    }

    pub fn phys_dims(&self) -> Vec<usize> {
        self.tensors.iter().map(|t| t.dim().1).collect()
    }

    /// Interior bond dimensions (between consecutive sites).
    pub fn bond_dims(&self) -> Vec<usize> {
        self.tensors
            .windows(2)
            .map(|w| w[0].dim().2)
            .collect()
    }

    pub fn max_bond(&self) -> usize {
        self.bond_dims().into_iter().max().unwrap_or(1)
    }

    /// Contract everything into a dense vector indexed row-major by the
    /// physical legs. Exponential in the site count; test/oracle use only.
    pub fn to_dense(&self) -> Array1<C64> {
        let mut acc = Array2::<C64>::ones((1, 1));
        for t in &self.tensors {
            let (b, p, bn) = t.dim();
            let m = t
                .view()
                .into_shape((b, p * bn))
                .expect("site tensors are standard layout");
            let prod = acc.dot(&m); // (rows, p*bn)
            let rows = prod.dim().0;
            acc = prod
                .into_shape((rows * p, bn))
                .expect("reshape after contraction");
        }
        let n = acc.dim().0;
        acc.into_shape(n).expect("boundary bond is 1")
    }

    /// Contract each physical leg with a per-site vector; returns the scalar.
    pub fn contract_phys_vectors(&self, vecs: &[Array1<C64>]) -> Result<C64, TensorError> {
        if vecs.len() != self.len() {
            return Err(TensorError::ShapeMismatch(format!(
                "{} vectors for {} sites",
                vecs.len(),
                self.len()
            )));
        }
        let mut l = Array1::<C64>::ones(1);
        for (t, v) in self.tensors.iter().zip(vecs) {
            let (b, p, bn) = t.dim();
            if v.len() != p {
                return Err(TensorError::ShapeMismatch(format!(
                    "vector length {} vs physical dimension {p}",
                    v.len()
                )));
            }
            let mut next = Array1::<C64>::zeros(bn);
            for pi in 0..p {
                let slice = t.slice(s![.., pi, ..]);
                let contrib = l.dot(&slice);
                next.scaled_add(v[pi], &contrib);
            }
            let _ = b;
            l = next;
        }
        Ok(l[0])
    }
}

/// One column of an MPO applied to the trailing sites of an MPS, optionally
/// emitting one new site at the right end.
///
/// Window tensors have legs (bond-left, phys-in, phys-out, bond-right) and
/// chain left to right over the last `window.len()` sites; the first window
/// tensor must have bond-left of dimension 1. `new_site` has legs
/// (bond-left, phys) and grows the chain by one site.
#[derive(Clone, Debug)]
pub struct ColumnOp {
    pub window: Vec<Array4<C64>>,
    pub new_site: Option<Array2<C64>>,
}

impl ColumnOp {
    fn validate(&self, mps: &MatrixProductState) -> Result<(), TensorError> {
        if self.window.len() > mps.len() {
            return Err(TensorError::ShapeMismatch(format!(
                "column window of {} sites on an MPS of {} sites",
                self.window.len(),
                mps.len()
            )));
        }
        let mut bond = 1usize;
        let offset = mps.len() - self.window.len();
        for (k, w) in self.window.iter().enumerate() {
            let (cl, pin, pout, cr) = w.dim();
            if cl != bond {
                return Err(TensorError::ShapeMismatch(format!(
                    "column bond mismatch at window site {k}: {cl} vs {bond}"
                )));
            }
            let site_p = mps.tensors[offset + k].dim().1;
            if pin != site_p || pout != site_p {
                return Err(TensorError::ShapeMismatch(format!(
                    "column physical dims ({pin}, {pout}) vs site dim {site_p}"
                )));
            }
            bond = cr;
        }
        if let Some(ns) = &self.new_site {
            if ns.dim().0 != bond {
                return Err(TensorError::ShapeMismatch(format!(
                    "new-site bond {} vs column bond {bond}",
                    ns.dim().0
                )));
            }
        } else if bond != 1 {
            return Err(TensorError::ShapeMismatch(
                "column bond must terminate at dimension 1 when no new site is emitted".into(),
            ));
        }
        if self.window.is_empty() && self.new_site.is_none() {
            return Err(TensorError::BadLegs("empty column".into()));
        }
        Ok(())
    }
}

/// Compression bookkeeping for a sequence of truncated SVDs.
#[derive(Clone, Copy, Debug, Default)]
pub struct CompressionReport {
    /// Root-sum-square over bonds of the per-bond relative discarded
    /// singular-value weight.
    pub discarded_rss: f64,
    pub max_bond: usize,
}

impl CompressionReport {
    pub fn absorb(&mut self, other: &CompressionReport) {
        self.discarded_rss = (self.discarded_rss * self.discarded_rss
            + other.discarded_rss * other.discarded_rss)
            .sqrt();
        self.max_bond = self.max_bond.max(other.max_bond);
    }
}

pub(crate) struct TruncationAccumulator {
    sum_sq: f64,
    max_bond: usize,
}

impl TruncationAccumulator {
    pub(crate) fn new() -> Self {
        Self {
            sum_sq: 0.0,
            max_bond: 1,
        }
    }

    fn record(&mut self, discarded: f64, total: f64, kept: usize) {
        if total > 0.0 {
            let rel = discarded / total;
            self.sum_sq += rel * rel;
        }
        self.max_bond = self.max_bond.max(kept);
    }

    pub(crate) fn report(&self) -> CompressionReport {
        CompressionReport {
            discarded_rss: self.sum_sq.sqrt(),
            max_bond: self.max_bond,
        }
    }
}

/// Contract the column into the trailing window of `tensors`, growing bonds
/// by the column bond dimension, and append the new site if present.
pub(crate) fn grow_with_column(tensors: &mut Vec<Array3<C64>>, col: &ColumnOp) {
    let offset = tensors.len() - col.window.len();
    for (k, w) in col.window.iter().enumerate() {
        let site = &tensors[offset + k];
        let (bl, p, br) = site.dim();
        let (cl, _pin, pout, cr) = w.dim();
        let mut g = Array3::<C64>::zeros((bl * cl, pout, br * cr));
        for c in 0..cl {
            for q in 0..pout {
                for cp in 0..cr {
                    for pi in 0..p {
                        let coeff = w[[c, pi, q, cp]];
                        if coeff == C64::new(0.0, 0.0) {
                            continue;
                        }
                        let src = site.slice(s![.., pi, ..]);
                        let mut dst = g.slice_mut(s![c..;cl, q, cp..;cr]);
                        dst.scaled_add(coeff, &src);
                    }
                }
            }
        }
        tensors[offset + k] = g;
    }
    if let Some(ns) = &col.new_site {
        let (cl, p) = ns.dim();
        let site = ns
            .to_owned()
            .into_shape((cl, p, 1))
            .expect("new site reshape");
        tensors.push(site);
    }
}

/// Left-to-right QR sweep establishing left-orthonormality on sites
/// `from..to`, moving the orthogonality center to `to`.
pub(crate) fn sweep_qr_l2r_range(
    tensors: &mut [Array3<C64>],
    from: usize,
    to: usize,
) -> Result<(), TensorError> {
    if tensors.is_empty() {
        return Ok(());
    }
    let to = to.min(tensors.len() - 1);
    for i in from..to {
        let (bl, p, br) = tensors[i].dim();
        let m = tensors[i]
            .view()
            .into_shape((bl * p, br))
            .expect("standard layout");
        let (q, r) = m
            .qr()
            .map_err(|e| TensorError::Backend(format!("QR failed: {e}")))?;
        let k = q.dim().1;
        tensors[i] = q.into_shape((bl, p, k)).expect("QR output reshape");
        let (nbl, np, nbr) = tensors[i + 1].dim();
        debug_assert_eq!(nbl, r.dim().1);
        let nm = tensors[i + 1]
            .view()
            .into_shape((nbl, np * nbr))
            .expect("standard layout");
        tensors[i + 1] = r
            .dot(&nm)
            .into_shape((k, np, nbr))
            .expect("absorb reshape");
    }
    Ok(())
}

/// Right-to-left truncation sweep: truncate every bond between `down_to` and
/// the end under `policy`, leaving the orthogonality center at `down_to`.
pub(crate) fn sweep_svd_r2l(
    tensors: &mut [Array3<C64>],
    down_to: usize,
    policy: &TruncationPolicy,
    acc: &mut TruncationAccumulator,
) -> Result<(), TensorError> {
    let n = tensors.len();
    if n == 0 {
        return Ok(());
    }
    for i in (down_to + 1..n).rev() {
        let (bl, p, br) = tensors[i].dim();
        let m = tensors[i]
            .view()
            .into_shape((bl, p * br))
            .expect("standard layout")
            .to_owned();
        let svd = truncated_svd(&m, policy)?;
        acc.record(svd.discarded_weight, svd.total_weight, svd.kept_rank);
        let k = svd.kept_rank;
        tensors[i] = svd
            .vt
            .into_shape((k, p, br))
            .expect("SVD output reshape");
        // carry U * diag(S) into the left neighbor
        let mut us = svd.u;
        for (j, sv) in svd.s.iter().enumerate() {
            us.column_mut(j).mapv_inplace(|v| v * sv);
        }
        let (pbl, pp, pbr) = tensors[i - 1].dim();
        debug_assert_eq!(pbr, us.dim().0);
        let pm = tensors[i - 1]
            .view()
            .into_shape((pbl * pp, pbr))
            .expect("standard layout");
        tensors[i - 1] = pm
            .dot(&us)
            .into_shape((pbl, pp, k))
            .expect("absorb reshape");
    }
    Ok(())
}

/// Apply one MPO column to the trailing sites of `mps` (growing it by one
/// site if the column emits one) and compress: a left-to-right sweep
/// establishing orthogonality followed by a right-to-left truncation sweep
/// under `policy`.
pub fn apply_mpo_column_and_compress(
    mps: &MatrixProductState,
    col: &ColumnOp,
    policy: &TruncationPolicy,
) -> Result<(MatrixProductState, CompressionReport), TensorError> {
    policy.validate()?;
    col.validate(mps)?;
    let mut tensors = mps.tensors.clone();
    grow_with_column(&mut tensors, col);
    let last = tensors.len() - 1;
    sweep_qr_l2r_range(&mut tensors, 0, last)?;
    let mut acc = TruncationAccumulator::new();
    sweep_svd_r2l(&mut tensors, 0, policy, &mut acc)?;
    let mut report = acc.report();
    let out = MatrixProductState::new(tensors)?;
    report.max_bond = report.max_bond.max(out.max_bond());
    Ok((out, report))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn rand_c64(state: &mut u64) -> C64 {
        let mut next = || {
            *state ^= *state << 13;
            *state ^= *state >> 7;
            *state ^= *state << 17;
            (*state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        };
        C64::new(next(), next())
    }

    fn rand_mps(phys: usize, bonds: &[usize], state: &mut u64) -> MatrixProductState {
        // bonds: interior bond dims; sites = bonds.len() + 1
        let n = bonds.len() + 1;
        let mut tensors = Vec::new();
        for i in 0..n {
            let bl = if i == 0 { 1 } else { bonds[i - 1] };
            let br = if i == n - 1 { 1 } else { bonds[i] };
            let mut t = Array3::<C64>::zeros((bl, phys, br));
            t.mapv_inplace(|_| rand_c64(state));
            tensors.push(t);
        }
        MatrixProductState::new(tensors).unwrap()
    }

    fn identity_column(phys: usize, sites: usize) -> ColumnOp {
        let mut w = Array4::<C64>::zeros((1, phys, phys, 1));
        for p in 0..phys {
            w[[0, p, p, 0]] = c(1.0, 0.0);
        }
        ColumnOp {
            window: vec![w; sites],
            new_site: None,
        }
    }

    fn rand_vecs(phys: usize, n: usize, state: &mut u64) -> Vec<Array1<C64>> {
        (0..n)
            .map(|_| Array1::from_iter((0..phys).map(|_| rand_c64(state))))
            .collect()
    }

    #[test]
    fn identity_column_preserves_state() {
        let mut st = 17_u64;
        let mps = rand_mps(4, &[3, 5, 2], &mut st);
        let col = identity_column(4, 4);
        let (out, _) =
            apply_mpo_column_and_compress(&mps, &col, &TruncationPolicy::new(1e-12)).unwrap();
        let vecs = rand_vecs(4, 4, &mut st);
        let before = mps.contract_phys_vectors(&vecs).unwrap();
        let after = out.contract_phys_vectors(&vecs).unwrap();
        assert!(
            (before - after).norm() <= 1e-10 * before.norm().max(1.0),
            "{before} vs {after}"
        );
    }

    #[test]
    fn all_ones_column_keeps_bond_one() {
        // A factorizable column (every entry of the influence equal to one)
        // must not grow any bond.
        let phys = 4;
        let mps = MatrixProductState::from_site_vectors(&[
            Array1::from_elem(phys, c(1.0, 0.0)),
            Array1::from_elem(phys, c(0.5, 0.1)),
        ]);
        let nclass = 3;
        let mut w_first = Array4::<C64>::zeros((1, phys, phys, nclass));
        for p in 0..phys {
            for cc in 0..nclass {
                w_first[[0, p, p, cc]] = c(1.0, 0.0);
            }
        }
        let mut w_mid = Array4::<C64>::zeros((nclass, phys, phys, nclass));
        for cc in 0..nclass {
            for p in 0..phys {
                w_mid[[cc, p, p, cc]] = c(1.0, 0.0);
            }
        }
        // new site: delta onto classes with all-ones on-site factor
        let class_of = [0usize, 1, 2, 1]; // arbitrary assignment covering all classes
        let mut ns = Array2::<C64>::zeros((nclass, phys));
        for p in 0..phys {
            ns[[class_of[p], p]] = c(1.0, 0.0);
        }
        let col = ColumnOp {
            window: vec![w_first, w_mid],
            new_site: Some(ns),
        };
        let (out, rep) =
            apply_mpo_column_and_compress(&mps, &col, &TruncationPolicy::from_exponent(-6.5))
                .unwrap();
        assert_eq!(out.len(), 3);
        assert!(out.bond_dims().iter().all(|&b| b == 1), "{:?}", out.bond_dims());
        assert!(rep.max_bond >= 1);
    }

    /// Dense reference: contract MPS and column tensors by brute force.
    fn dense_apply(mps: &MatrixProductState, col: &ColumnOp) -> Array1<C64> {
        let phys = mps.phys_dims();
        let n_in = mps.len();
        let dense_in = mps.to_dense();
        let offset = n_in - col.window.len();
        let n_out = n_in + usize::from(col.new_site.is_some());
        let out_phys: Vec<usize> = {
            let mut v = phys.clone();
            if let Some(ns) = &col.new_site {
                v.push(ns.dim().1);
            }
            v
        };
        let total_out: usize = out_phys.iter().product();
        let mut out = Array1::<C64>::zeros(total_out);
        let total_in: usize = phys.iter().product();
        // iterate over all (input index, output window indices)
        for flat_out in 0..total_out {
            // decode output multi-index
            let mut rem = flat_out;
            let mut oidx = vec![0usize; n_out];
            for i in (0..n_out).rev() {
                oidx[i] = rem % out_phys[i];
                rem /= out_phys[i];
            }
            let mut acc = c(0.0, 0.0);
            for flat_in in 0..total_in {
                let mut rem = flat_in;
                let mut iidx = vec![0usize; n_in];
                for i in (0..n_in).rev() {
                    iidx[i] = rem % phys[i];
                    rem /= phys[i];
                }
                // sites before the window must agree
                if iidx[..offset] != oidx[..offset] {
                    continue;
                }
                // column element: chain over the window bond
                let nclass_total: usize = col
                    .window
                    .last()
                    .map(|w| w.dim().3)
                    .unwrap_or(if col.new_site.is_some() { 1 } else { 1 });
                let mut elems = Array1::<C64>::zeros(1);
                elems[0] = c(1.0, 0.0);
                let mut bond_vals: Vec<C64> = vec![c(1.0, 0.0)];
                for (k, w) in col.window.iter().enumerate() {
                    let (cl, _pi, _po, cr) = w.dim();
                    debug_assert_eq!(cl, bond_vals.len());
                    let mut next = vec![c(0.0, 0.0); cr];
                    for (ci, bv) in bond_vals.iter().enumerate() {
                        for co in 0..cr {
                            next[co] += bv * w[[ci, iidx[offset + k], oidx[offset + k], co]];
                        }
                    }
                    bond_vals = next;
                }
                let col_val = if let Some(ns) = &col.new_site {
                    let q = oidx[n_out - 1];
                    bond_vals
                        .iter()
                        .enumerate()
                        .map(|(ci, bv)| bv * ns[[ci, q]])
                        .sum::<C64>()
                } else {
                    debug_assert_eq!(bond_vals.len(), 1);
                    bond_vals[0]
                };
                let _ = nclass_total;
                acc += dense_in[flat_in] * col_val;
            }
            out[flat_out] = acc;
        }
        out
    }

    #[test]
    fn random_column_matches_dense_contraction() {
        let mut st = 20_240_u64;
        let mps = rand_mps(4, &[3, 4], &mut st);
        let mut window = Vec::new();
        let dims = [(1usize, 3usize), (3, 2), (2, 3)];
        for (cl, cr) in dims {
            let mut w = Array4::<C64>::zeros((cl, 4, 4, cr));
            w.mapv_inplace(|_| rand_c64(&mut st));
            window.push(w);
        }
        let mut ns = Array2::<C64>::zeros((3, 4));
        ns.mapv_inplace(|_| rand_c64(&mut st));
        let col = ColumnOp {
            window,
            new_site: Some(ns),
        };
        let dense = dense_apply(&mps, &col);
        let (out, _) =
            apply_mpo_column_and_compress(&mps, &col, &TruncationPolicy::new(0.0)).unwrap();
        let got = out.to_dense();
        assert_eq!(got.len(), dense.len());
        let scale = dense.iter().map(|v| v.norm()).fold(0.0f64, f64::max);
        for (a, b) in got.iter().zip(dense.iter()) {
            assert!((a - b).norm() < 1e-10 * scale.max(1.0), "{a} vs {b}");
        }
    }

    #[test]
    fn compression_monotonic_in_cutoff() {
        let mut st = 555_u64;
        for _ in 0..20 {
            let mps = rand_mps(4, &[4, 6, 4], &mut st);
            let mut window = Vec::new();
            for (cl, cr) in [(1usize, 3usize), (3, 3), (3, 3), (3, 3)] {
                let mut w = Array4::<C64>::zeros((cl, 4, 4, cr));
                w.mapv_inplace(|_| rand_c64(&mut st));
                window.push(w);
            }
            let mut ns = Array2::<C64>::zeros((3, 4));
            ns.mapv_inplace(|_| rand_c64(&mut st));
            let col = ColumnOp {
                window,
                new_site: Some(ns),
            };
            let (loose, _) =
                apply_mpo_column_and_compress(&mps, &col, &TruncationPolicy::new(1e-2)).unwrap();
            let (tight, _) =
                apply_mpo_column_and_compress(&mps, &col, &TruncationPolicy::new(1e-8)).unwrap();
            for (bl, bt) in loose.bond_dims().iter().zip(tight.bond_dims().iter()) {
                assert!(bl <= bt, "loose {bl} > tight {bt}");
            }
        }
    }

    #[test]
    fn dense_contraction_matches_naive_for_small_mps() {
        let mut st = 777_u64;
        let mps = rand_mps(4, &[2, 3, 2, 2], &mut st);
        let dense = mps.to_dense();
        // naive: explicit loop over all physical indices
        let phys = mps.phys_dims();
        let total: usize = phys.iter().product();
        for flat in 0..total {
            let mut rem = flat;
            let mut idx = vec![0usize; mps.len()];
            for i in (0..mps.len()).rev() {
                idx[i] = rem % phys[i];
                rem /= phys[i];
            }
            let mut vecs = Vec::new();
            for (i, &p) in phys.iter().enumerate() {
                let mut v = Array1::<C64>::zeros(p);
                v[idx[i]] = c(1.0, 0.0);
                vecs.push(v);
            }
            let val = mps.contract_phys_vectors(&vecs).unwrap();
            assert!((val - dense[flat]).norm() < 1e-10);
        }
    }

    #[test]
    fn column_shape_mismatch_rejected() {
        let mut st = 31_u64;
        let mps = rand_mps(4, &[2], &mut st);
        // wrong physical dimension
        let mut w = Array4::<C64>::zeros((1, 3, 3, 1));
        w.mapv_inplace(|_| rand_c64(&mut st));
        let col = ColumnOp {
            window: vec![w],
            new_site: None,
        };
        assert!(matches!(
            apply_mpo_column_and_compress(&mps, &col, &TruncationPolicy::new(0.0)),
            Err(TensorError::ShapeMismatch(_))
        ));
    }
}
