//! Random-matrix sampling and block-fading channel draws.
//!
//! Provides Ginibre matrices, Haar unitaries, uniform Stiefel frames
//! (optionally constrained to the orthogonal complement of a given frame),
//! the isotropic re-decomposition that separates a draw into amplitude and
//! phase factors, and full four-link channel draws with coherence-time
//! lifting.
//!
//! Every sampler is a pure function of an [`RngStream`]: the same
//! `(base_seed, stream_id)` always reproduces the same draw, no matter how
//! trials are scheduled. Monte Carlo loops derive one substream per trial,
//! which keeps serial and parallel execution bit-identical.

use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt;

use rand::{Rng, SeedableRng};
pub use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::cxmat::{cx, CMat, MatError};
use crate::region::AntennaConfig;

/// Errors from samplers and fading-law construction.
#[derive(Debug, Clone, PartialEq)]
pub enum RandError {
    /// Propagated linear-algebra failure.
    Mat(MatError),
    /// Requested a Stiefel frame with more columns than fit.
    FrameTooLarge { m: usize, k: usize, k3: usize },
    /// Conditioning frame is not orthonormal.
    NotOrthonormal { defect: f64 },
    /// Conditioning frame has the wrong number of rows.
    FrameRowMismatch { expected: usize, got: usize },
    /// Fixed spectrum values must be strictly positive.
    SpectrumNotPositive { value: f64 },
    /// Fixed spectrum has fewer values than a link needs.
    SpectrumTooShort { needed: usize, got: usize },
    /// Fixed spectrum must be nonempty.
    SpectrumEmpty,
    /// Coherence time must be at least 1.
    BadCoherenceTime { t: usize },
}

impl fmt::Display for RandError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RandError::Mat(e) => write!(f, "{e}"),
            RandError::FrameTooLarge { m, k, k3 } => {
                write!(f, "cannot fit {k} orthonormal columns in C^{m} orthogonal to {k3} given columns")
            }
            RandError::NotOrthonormal { defect } => {
                write!(f, "conditioning frame is not orthonormal (defect {defect:.3e})")
            }
            RandError::FrameRowMismatch { expected, got } => {
                write!(f, "conditioning frame has {got} rows, expected {expected}")
            }
            RandError::SpectrumNotPositive { value } => {
                write!(f, "fixed spectrum requires strictly positive singular values, got {value}")
            }
            RandError::SpectrumTooShort { needed, got } => {
                write!(f, "fixed spectrum has {got} values but a link needs {needed}")
            }
            RandError::SpectrumEmpty => write!(f, "fixed spectrum must be nonempty"),
            RandError::BadCoherenceTime { t } => write!(f, "coherence time must be >= 1, got {t}"),
        }
    }
}

impl std::error::Error for RandError {}

impl From<MatError> for RandError {
    fn from(e: MatError) -> Self {
        RandError::Mat(e)
    }
}

// ---------------------------------------------------------------------------
// Counter-based substreams
// ---------------------------------------------------------------------------

#[inline]
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// A reproducible random stream identified by `(base_seed, stream_id)`.
///
/// Streams are cheap value types; `substream(k)` derives a new independent
/// stream deterministically, so a Monte Carlo run is a pure function of its
/// root stream regardless of execution order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RngStream {
    base_seed: u64,
    stream_id: u64,
}

impl RngStream {
    pub fn new(base_seed: u64, stream_id: u64) -> Self {
        RngStream { base_seed, stream_id }
    }

    /// Root stream for a given seed.
    pub fn from_seed(base_seed: u64) -> Self {
        RngStream::new(base_seed, 0)
    }

    pub fn base_seed(&self) -> u64 {
        self.base_seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    /// Derive the `index`-th child stream.
    pub fn substream(&self, index: u64) -> Self {
        let bump = index.wrapping_add(1).wrapping_mul(0x9e37_79b9_7f4a_7c15);
        RngStream {
            base_seed: self.base_seed,
            stream_id: mix64(self.stream_id.wrapping_add(bump)),
        }
    }

    /// Instantiate the generator for this stream.
    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.base_seed);
        rng.set_stream(self.stream_id);
        rng
    }
}

/// One CSCG scalar of unit variance (real/imag parts each variance 1/2).
#[inline]
pub fn cscg(rng: &mut ChaCha8Rng) -> crate::cxmat::Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    cx(re * FRAC_1_SQRT_2, im * FRAC_1_SQRT_2)
}

/// n×m Ginibre matrix drawn from an already-instantiated generator.
pub fn ginibre_mat(rng: &mut ChaCha8Rng, n: usize, m: usize) -> CMat {
    let mut mat = CMat::zeros(n, m);
    for i in 0..n {
        for j in 0..m {
            mat[(i, j)] = cscg(rng);
        }
    }
    mat
}

// ---------------------------------------------------------------------------
// Samplers
// ---------------------------------------------------------------------------

/// n×m matrix of i.i.d. unit-variance CSCG entries.
pub fn sample_ginibre(stream: &RngStream, n: usize, m: usize) -> CMat {
    ginibre_mat(&mut stream.rng(), n, m)
}

/// Haar-distributed m×m unitary: QR of a Ginibre draw with the R diagonal
/// phase-normalized to real non-negative.
pub fn sample_haar_unitary(stream: &RngStream, m: usize) -> CMat {
    let g = sample_ginibre(stream, m, m);
    let (q, _) = g.qr().expect("square QR cannot fail");
    q
}

/// Uniform frame on the Stiefel manifold of m×k matrices with orthonormal
/// columns; distributed as the first k columns of a Haar unitary.
pub fn sample_stiefel(stream: &RngStream, m: usize, k: usize) -> Result<CMat, RandError> {
    if k > m {
        return Err(RandError::FrameTooLarge { m, k, k3: 0 });
    }
    let g = sample_ginibre(stream, m, k);
    let (q, _) = g.qr()?;
    Ok(q)
}

/// Compact SVD of `g` with the right factor scrambled by a fresh Haar
/// unitary: returns `(w, lambda, v)` where `v = Q·v1` for `g = w·lambda·v1†`.
///
/// For an isotropic `g`, `v` is uniform on its Stiefel manifold and
/// independent of `(w, lambda)`, and `w·lambda·v†` is identically
/// distributed as `g`.
pub fn isotropic_scramble(
    stream: &RngStream,
    g: &CMat,
) -> Result<(CMat, CMat, CMat), RandError> {
    let (w, lambda, v1) = g.compact_svd()?;
    let q = sample_haar_unitary(stream, g.cols());
    let v = q.matmul(&v1)?;
    Ok((w, lambda, v))
}

/// Uniform m×k orthonormal frame constrained to be orthogonal to the
/// columns of `v3` (itself m×k3 orthonormal). With an empty `v3` this is
/// plain [`sample_stiefel`].
pub fn sample_conditioned_stiefel(
    stream: &RngStream,
    m: usize,
    k: usize,
    v3: &CMat,
) -> Result<CMat, RandError> {
    let k3 = v3.cols();
    if k3 == 0 {
        return sample_stiefel(stream, m, k);
    }
    if v3.rows() != m {
        return Err(RandError::FrameRowMismatch {
            expected: m,
            got: v3.rows(),
        });
    }
    if k + k3 > m {
        return Err(RandError::FrameTooLarge { m, k, k3 });
    }
    let gram = v3.adjoint().matmul(v3)?;
    let defect = gram
        .sub(&CMat::identity(k3))?
        .frobenius_norm_sq()
        .sqrt();
    if defect > 1e-8 {
        return Err(RandError::NotOrthonormal { defect });
    }
    // orthonormal basis of the complement: QR of [v3 | G] and drop the
    // leading k3 columns
    let g = sample_ginibre(&stream.substream(0), m, m - k3);
    let (q, _) = v3.hstack(&g)?.qr()?;
    let complement = q.columns(k3, m);
    let inner = sample_stiefel(&stream.substream(1), m - k3, k)?;
    Ok(complement.matmul(&inner)?)
}

// ---------------------------------------------------------------------------
// Fading laws and channel draws
// ---------------------------------------------------------------------------

/// Distribution family for a single coherence block.
#[derive(Debug, Clone, PartialEq)]
pub enum FadingKind {
    /// i.i.d. CSCG entries.
    Rayleigh,
    /// Deterministic singular values with independent Haar-derived factors:
    /// H = W·diag(σ)·V†. Isolates amplitude randomness from phase
    /// randomness. A single value broadcasts to every link; otherwise each
    /// link takes the first min(N_r, M_t) values from the pool.
    FixedSpectrum(Vec<f64>),
    /// A Ginibre draw re-expressed through the scrambled decomposition
    /// (same distribution as Rayleigh, exercising the amplitude/phase
    /// split).
    Scrambled,
}

/// Recipe for sampling one coherence block of all four links.
#[derive(Debug, Clone, PartialEq)]
pub struct FadingLaw {
    pub kind: FadingKind,
    pub coherence_t: usize,
}

impl FadingLaw {
    pub fn rayleigh(coherence_t: usize) -> Result<Self, RandError> {
        if coherence_t == 0 {
            return Err(RandError::BadCoherenceTime { t: coherence_t });
        }
        Ok(FadingLaw {
            kind: FadingKind::Rayleigh,
            coherence_t,
        })
    }

    /// Fixed-spectrum law; all values must be strictly positive so every
    /// link is full rank by construction.
    pub fn fixed_spectrum(values: Vec<f64>, coherence_t: usize) -> Result<Self, RandError> {
        if coherence_t == 0 {
            return Err(RandError::BadCoherenceTime { t: coherence_t });
        }
        if values.is_empty() {
            return Err(RandError::SpectrumEmpty);
        }
        for &v in &values {
            if v <= 0.0 || !v.is_finite() {
                return Err(RandError::SpectrumNotPositive { value: v });
            }
        }
        Ok(FadingLaw {
            kind: FadingKind::FixedSpectrum(values),
            coherence_t,
        })
    }

    pub fn scrambled(coherence_t: usize) -> Result<Self, RandError> {
        if coherence_t == 0 {
            return Err(RandError::BadCoherenceTime { t: coherence_t });
        }
        Ok(FadingLaw {
            kind: FadingKind::Scrambled,
            coherence_t,
        })
    }

    fn spectrum_for(values: &[f64], k: usize) -> Result<Vec<f64>, RandError> {
        if values.len() == 1 {
            return Ok(vec![values[0]; k]);
        }
        if values.len() < k {
            return Err(RandError::SpectrumTooShort {
                needed: k,
                got: values.len(),
            });
        }
        Ok(values[..k].to_vec())
    }
}

/// Identifies one of the four links H_rt (receiver r, transmitter t).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Link {
    Rx1Tx1,
    Rx1Tx2,
    Rx2Tx1,
    Rx2Tx2,
}

impl Link {
    pub const ALL: [Link; 4] = [Link::Rx1Tx1, Link::Rx1Tx2, Link::Rx2Tx1, Link::Rx2Tx2];

    /// Receiver index (1 or 2).
    pub fn rx(&self) -> usize {
        match self {
            Link::Rx1Tx1 | Link::Rx1Tx2 => 1,
            Link::Rx2Tx1 | Link::Rx2Tx2 => 2,
        }
    }

    /// Transmitter index (1 or 2).
    pub fn tx(&self) -> usize {
        match self {
            Link::Rx1Tx1 | Link::Rx2Tx1 => 1,
            Link::Rx1Tx2 | Link::Rx2Tx2 => 2,
        }
    }

    /// (N_r, M_t) for this link under the given antenna configuration.
    pub fn dims(&self, cfg: &AntennaConfig) -> (usize, usize) {
        let n = if self.rx() == 1 { cfg.n1 } else { cfg.n2 };
        let m = if self.tx() == 1 { cfg.m1 } else { cfg.m2 };
        (n, m)
    }
}

/// One realization of all four channel matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelDraw {
    pub h11: CMat,
    pub h12: CMat,
    pub h21: CMat,
    pub h22: CMat,
}

impl ChannelDraw {
    pub fn link(&self, link: Link) -> &CMat {
        match link {
            Link::Rx1Tx1 => &self.h11,
            Link::Rx1Tx2 => &self.h12,
            Link::Rx2Tx1 => &self.h21,
            Link::Rx2Tx2 => &self.h22,
        }
    }
}

fn sample_link(
    stream: &RngStream,
    n: usize,
    m: usize,
    kind: &FadingKind,
) -> Result<CMat, RandError> {
    match kind {
        FadingKind::Rayleigh => Ok(sample_ginibre(stream, n, m)),
        FadingKind::FixedSpectrum(values) => {
            let k = n.min(m);
            let sv = FadingLaw::spectrum_for(values, k)?;
            let w = sample_stiefel(&stream.substream(0), n, k)?;
            let v = sample_stiefel(&stream.substream(1), m, k)?;
            let lambda = CMat::diag_real(&sv);
            Ok(w.matmul(&lambda)?.matmul(&v.adjoint())?)
        }
        FadingKind::Scrambled => {
            let g = sample_ginibre(&stream.substream(0), n, m);
            let (w, lambda, v) = isotropic_scramble(&stream.substream(1), &g)?;
            Ok(w.matmul(&lambda)?.matmul(&v.adjoint())?)
        }
    }
}

/// Draw all four links independently for one coherence block.
pub fn sample_channel(
    stream: &RngStream,
    cfg: &AntennaConfig,
    law: &FadingLaw,
) -> Result<ChannelDraw, RandError> {
    let h11 = sample_link(&stream.substream(0), cfg.n1, cfg.m1, &law.kind)?;
    let h12 = sample_link(&stream.substream(1), cfg.n1, cfg.m2, &law.kind)?;
    let h21 = sample_link(&stream.substream(2), cfg.n2, cfg.m1, &law.kind)?;
    let h22 = sample_link(&stream.substream(3), cfg.n2, cfg.m2, &law.kind)?;
    Ok(ChannelDraw { h11, h12, h21, h22 })
}

/// Replace each link by a block-diagonal stack of `t` copies — the
/// coherence-time lifting that turns a block of `t` symbols into one
/// super-symbol.
pub fn lift_block(draw: &ChannelDraw, t: usize) -> ChannelDraw {
    assert!(t >= 1, "coherence lift requires t >= 1");
    let lift = |m: &CMat| {
        let blocks = vec![m.clone(); t];
        CMat::block_diag(&blocks).expect("nonempty block list")
    };
    ChannelDraw {
        h11: lift(&draw.h11),
        h12: lift(&draw.h12),
        h21: lift(&draw.h21),
        h22: lift(&draw.h22),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cxmat::Complex64;

    fn mean_and_se(samples: &[f64]) -> (f64, f64) {
        let n = samples.len() as f64;
        let mean = samples.iter().sum::<f64>() / n;
        let var = samples.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
        (mean, (var / n).sqrt())
    }

    #[test]
    fn ginibre_is_deterministic_per_stream() {
        let s = RngStream::new(42, 7);
        let a = sample_ginibre(&s, 3, 2);
        let b = sample_ginibre(&s, 3, 2);
        assert_eq!(a, b);
        let c = sample_ginibre(&s.substream(0), 3, 2);
        assert_ne!(a, c);
    }

    #[test]
    fn substreams_differ_across_indices_and_parents() {
        let root = RngStream::from_seed(1);
        let ids: Vec<u64> = (0..100)
            .map(|i| root.substream(i).stream_id())
            .collect();
        let mut sorted = ids.clone();
        sorted.sort_unstable();
        sorted.dedup();
        assert_eq!(sorted.len(), ids.len());
        assert_ne!(
            root.substream(0).substream(1),
            root.substream(1).substream(0)
        );
    }

    #[test]
    fn ginibre_unit_average_power() {
        let root = RngStream::from_seed(11);
        let trials = 100_000;
        let mut samples = Vec::with_capacity(trials);
        for t in 0..trials {
            let g = sample_ginibre(&root.substream(t as u64), 2, 2);
            samples.push(g.frobenius_norm_sq() / 4.0);
        }
        let (mean, se) = mean_and_se(&samples);
        assert!(
            (mean - 1.0).abs() < 3.0 * se,
            "mean power {mean} not within 3se ({se}) of 1"
        );
    }

    #[test]
    fn ginibre_zero_mean_entries() {
        let root = RngStream::from_seed(12);
        let trials = 50_000;
        let mut re_samples = Vec::with_capacity(trials);
        let mut im_samples = Vec::with_capacity(trials);
        for t in 0..trials {
            let g = sample_ginibre(&root.substream(t as u64), 2, 2);
            re_samples.push(g[(0, 1)].re);
            im_samples.push(g[(1, 0)].im);
        }
        let (mre, sre) = mean_and_se(&re_samples);
        let (mim, sim) = mean_and_se(&im_samples);
        assert!(mre.abs() < 3.0 * sre);
        assert!(mim.abs() < 3.0 * sim);
    }

    #[test]
    fn haar_scalar_has_uniform_phase() {
        let root = RngStream::from_seed(13);
        let trials = 100_000usize;
        let bins = 16usize;
        let mut counts = vec![0usize; bins];
        for t in 0..trials {
            let u = sample_haar_unitary(&root.substream(t as u64), 1);
            let z = u[(0, 0)];
            assert!((z.norm() - 1.0).abs() < 1e-12);
            let frac = (z.arg() + std::f64::consts::PI) / (2.0 * std::f64::consts::PI);
            let bin = ((frac * bins as f64) as usize).min(bins - 1);
            counts[bin] += 1;
        }
        let expect = trials as f64 / bins as f64;
        let chi2: f64 = counts
            .iter()
            .map(|&c| {
                let d = c as f64 - expect;
                d * d / expect
            })
            .sum();
        // chi-square critical value, 15 dof, upper tail 0.001
        assert!(chi2 < 37.70, "phase histogram chi2 = {chi2}");
    }

    #[test]
    fn haar_first_column_isotropic() {
        let root = RngStream::from_seed(14);
        let trials = 100_000;
        // accumulate E[q1 q1†] for m = 2
        let mut diag0 = Vec::with_capacity(trials);
        let mut diag1 = Vec::with_capacity(trials);
        let mut off_re = Vec::with_capacity(trials);
        for t in 0..trials {
            let q = sample_haar_unitary(&root.substream(t as u64), 2);
            let a = q[(0, 0)];
            let b = q[(1, 0)];
            diag0.push(a.norm_sqr());
            diag1.push(b.norm_sqr());
            off_re.push((a * b.conj()).re);
        }
        let (m0, s0) = mean_and_se(&diag0);
        let (m1, s1) = mean_and_se(&diag1);
        let (mo, so) = mean_and_se(&off_re);
        assert!((m0 - 0.5).abs() < 3.0 * s0);
        assert!((m1 - 0.5).abs() < 3.0 * s1);
        assert!(mo.abs() < 3.0 * so);
    }

    #[test]
    fn haar_columns_orthonormal() {
        let q = sample_haar_unitary(&RngStream::from_seed(15), 4);
        let qtq = q.adjoint().matmul(&q).unwrap();
        let defect = qtq.sub(&CMat::identity(4)).unwrap().frobenius_norm_sq().sqrt();
        assert!(defect < 1e-10);
    }

    #[test]
    fn stiefel_full_width_equals_haar() {
        let s = RngStream::new(7, 3);
        let v = sample_stiefel(&s, 3, 3).unwrap();
        let q = sample_haar_unitary(&s, 3);
        assert_eq!(v, q);
    }

    #[test]
    fn stiefel_rejects_too_many_columns() {
        assert!(matches!(
            sample_stiefel(&RngStream::from_seed(0), 2, 3),
            Err(RandError::FrameTooLarge { .. })
        ));
    }

    #[test]
    fn stiefel_second_moment_is_k_over_m() {
        let root = RngStream::from_seed(16);
        let trials = 100_000;
        let mut d0 = Vec::with_capacity(trials);
        let mut d1 = Vec::with_capacity(trials);
        for t in 0..trials {
            let v = sample_stiefel(&root.substream(t as u64), 2, 1).unwrap();
            d0.push(v[(0, 0)].norm_sqr());
            d1.push(v[(1, 0)].norm_sqr());
        }
        let (m0, s0) = mean_and_se(&d0);
        let (m1, s1) = mean_and_se(&d1);
        assert!((m0 - 0.5).abs() < 3.0 * s0);
        assert!((m1 - 0.5).abs() < 3.0 * s1);
    }

    #[test]
    fn scramble_preserves_product_and_orthonormality() {
        let stream = RngStream::from_seed(17);
        let g = sample_ginibre(&stream.substream(99), 3, 4);
        let (w, lambda, v) = isotropic_scramble(&stream, &g).unwrap();
        let vtv = v.adjoint().matmul(&v).unwrap();
        assert!(
            vtv.sub(&CMat::identity(3)).unwrap().frobenius_norm_sq().sqrt() < 1e-10
        );
        // scrambled product has the same singular values as g
        let recon = w.matmul(&lambda).unwrap().matmul(&v.adjoint()).unwrap();
        let sv_g = g.singular_values().unwrap();
        let sv_r = recon.singular_values().unwrap();
        for (a, b) in sv_g.iter().zip(sv_r.iter()) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn scramble_of_identity_keeps_unit_spectrum() {
        let (_, lambda, v) = isotropic_scramble(&RngStream::from_seed(18), &CMat::identity(2)).unwrap();
        assert_eq!(lambda.diagonal_real(), vec![1.0, 1.0]);
        let vtv = v.adjoint().matmul(&v).unwrap();
        assert!(vtv.sub(&CMat::identity(2)).unwrap().frobenius_norm_sq().sqrt() < 1e-10);
    }

    #[test]
    fn scrambled_factor_uncorrelated_with_spectrum() {
        let root = RngStream::from_seed(19);
        let trials = 100_000;
        let mut vs = Vec::with_capacity(trials);
        let mut ls = Vec::with_capacity(trials);
        for t in 0..trials {
            let sub = root.substream(t as u64);
            let g = sample_ginibre(&sub.substream(0), 2, 2);
            let (_, lambda, v) = isotropic_scramble(&sub.substream(1), &g).unwrap();
            vs.push(v[(0, 0)].re);
            ls.push(lambda[(0, 0)].re);
        }
        let (mv, _) = mean_and_se(&vs);
        let (ml, _) = mean_and_se(&ls);
        let mut cov = 0.0;
        let mut var_v = 0.0;
        let mut var_l = 0.0;
        for (a, b) in vs.iter().zip(ls.iter()) {
            cov += (a - mv) * (b - ml);
            var_v += (a - mv) * (a - mv);
            var_l += (b - ml) * (b - ml);
        }
        let corr = cov / (var_v.sqrt() * var_l.sqrt());
        assert!(
            corr.abs() < 3.0 / (trials as f64).sqrt(),
            "correlation {corr} too large"
        );
    }

    #[test]
    fn conditioned_stiefel_is_orthogonal_to_frame() {
        let stream = RngStream::from_seed(20);
        let mut e1 = CMat::zeros(3, 1);
        e1[(0, 0)] = Complex64::ONE;
        let v = sample_conditioned_stiefel(&stream, 3, 1, &e1).unwrap();
        assert!((v.frobenius_norm_sq() - 1.0).abs() < 1e-12);
        let cross = v.adjoint().matmul(&e1).unwrap();
        assert!(cross.frobenius_norm_sq().sqrt() < 1e-10);

        // random conditioning frame, multiple columns
        let v3 = sample_stiefel(&stream.substream(5), 5, 2).unwrap();
        let v = sample_conditioned_stiefel(&stream.substream(6), 5, 2, &v3).unwrap();
        let cross = v.adjoint().matmul(&v3).unwrap();
        assert!(cross.frobenius_norm_sq().sqrt() < 1e-10);
        let vtv = v.adjoint().matmul(&v).unwrap();
        assert!(vtv.sub(&CMat::identity(2)).unwrap().frobenius_norm_sq().sqrt() < 1e-10);
    }

    #[test]
    fn conditioned_stiefel_empty_frame_reduces_to_stiefel() {
        let stream = RngStream::from_seed(21);
        let empty = CMat::zeros(4, 0);
        let a = sample_conditioned_stiefel(&stream, 4, 2, &empty).unwrap();
        let b = sample_stiefel(&stream, 4, 2).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn conditioned_stiefel_rejects_bad_inputs() {
        let stream = RngStream::from_seed(22);
        let e1 = CMat::from_real_rows(&[vec![1.0], vec![0.0], vec![0.0]]).unwrap();
        assert!(matches!(
            sample_conditioned_stiefel(&stream, 3, 3, &e1),
            Err(RandError::FrameTooLarge { .. })
        ));
        let skewed = CMat::from_real_rows(&[vec![1.0], vec![1.0], vec![0.0]]).unwrap();
        assert!(matches!(
            sample_conditioned_stiefel(&stream, 3, 1, &skewed),
            Err(RandError::NotOrthonormal { .. })
        ));
    }

    #[test]
    fn channel_draw_shapes_follow_config() {
        let cfg = AntennaConfig::new(1, 2, 3, 4).unwrap();
        let law = FadingLaw::rayleigh(1).unwrap();
        let draw = sample_channel(&RngStream::from_seed(23), &cfg, &law).unwrap();
        assert_eq!((draw.h11.rows(), draw.h11.cols()), (2, 1));
        assert_eq!((draw.h12.rows(), draw.h12.cols()), (2, 3));
        assert_eq!((draw.h21.rows(), draw.h21.cols()), (4, 1));
        assert_eq!((draw.h22.rows(), draw.h22.cols()), (4, 3));
    }

    #[test]
    fn fixed_unit_spectrum_gives_partial_isometries() {
        let cfg = AntennaConfig::new(2, 2, 3, 3).unwrap();
        let law = FadingLaw::fixed_spectrum(vec![1.0], 1).unwrap();
        let draw = sample_channel(&RngStream::from_seed(24), &cfg, &law).unwrap();
        for link in [&draw.h11, &draw.h22] {
            let hth = link.adjoint().matmul(link).unwrap();
            let defect = hth
                .sub(&CMat::identity(link.cols()))
                .unwrap()
                .frobenius_norm_sq()
                .sqrt();
            assert!(defect < 1e-10);
        }
    }

    #[test]
    fn rayleigh_draws_are_full_rank() {
        let cfg = AntennaConfig::new(1, 2, 3, 4).unwrap();
        let law = FadingLaw::rayleigh(1).unwrap();
        let root = RngStream::from_seed(25);
        for t in 0..10_000u64 {
            let draw = sample_channel(&root.substream(t), &cfg, &law).unwrap();
            for link in Link::ALL {
                let sv = draw.link(link).singular_values().unwrap();
                assert!(*sv.last().unwrap() > 0.0, "rank-deficient draw at trial {t}");
            }
        }
    }

    #[test]
    fn fixed_spectrum_validation() {
        assert!(matches!(
            FadingLaw::fixed_spectrum(vec![1.0, 0.0], 1),
            Err(RandError::SpectrumNotPositive { .. })
        ));
        assert!(matches!(
            FadingLaw::fixed_spectrum(vec![], 1),
            Err(RandError::SpectrumEmpty)
        ));
        assert!(matches!(
            FadingLaw::rayleigh(0),
            Err(RandError::BadCoherenceTime { .. })
        ));
        // two values cannot serve a link needing three
        let cfg = AntennaConfig::new(3, 3, 3, 3).unwrap();
        let law = FadingLaw::fixed_spectrum(vec![1.0, 2.0], 1).unwrap();
        assert!(matches!(
            sample_channel(&RngStream::from_seed(1), &cfg, &law),
            Err(RandError::SpectrumTooShort { .. })
        ));
    }

    #[test]
    fn lift_block_shapes_and_spectrum() {
        let cfg = AntennaConfig::new(1, 2, 3, 4).unwrap();
        let law = FadingLaw::rayleigh(1).unwrap();
        let draw = sample_channel(&RngStream::from_seed(26), &cfg, &law).unwrap();

        let same = lift_block(&draw, 1);
        assert_eq!(same, draw);

        let lifted = lift_block(&draw, 2);
        assert_eq!((lifted.h11.rows(), lifted.h11.cols()), (4, 2));

        // singular values repeat with multiplicity t
        let mut expected: Vec<f64> = draw
            .h12
            .singular_values()
            .unwrap()
            .into_iter()
            .flat_map(|s| [s, s])
            .collect();
        expected.sort_by(|a, b| b.partial_cmp(a).unwrap());
        let got = lifted.h12.singular_values().unwrap();
        for (a, b) in expected.iter().zip(got.iter()) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn haar_invariance_under_fixed_rotation() {
        // moments of U·Q match those of Q for a fixed unitary U
        let root = RngStream::from_seed(27);
        let u = {
            // fixed 2x2 rotation built from the DFT matrix
            let s = FRAC_1_SQRT_2;
            CMat::from_rows(&[
                vec![cx(s, 0.0), cx(s, 0.0)],
                vec![cx(s, 0.0), cx(-s, 0.0)],
            ])
            .unwrap()
        };
        let trials = 50_000;
        let mut plain = Vec::with_capacity(trials);
        let mut rotated = Vec::with_capacity(trials);
        for t in 0..trials {
            let q = sample_haar_unitary(&root.substream(t as u64), 2);
            let uq = u.matmul(&q).unwrap();
            plain.push(q[(0, 0)].norm_sqr());
            rotated.push(uq[(0, 0)].norm_sqr());
        }
        let (mp, sp) = mean_and_se(&plain);
        let (mr, sr) = mean_and_se(&rotated);
        assert!((mp - mr).abs() < 3.0 * (sp * sp + sr * sr).sqrt());
    }
}
