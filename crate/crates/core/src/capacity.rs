//! Mutual-information machinery: ergodic log-det rates, MAC pentagons,
//! achievable rate regions, conditional Gaussian closed forms,
//! discrete-constellation mutual information, I-MMSE utilities, DoF slope
//! extraction, and the additive gap constants.
//!
//! Every stochastic quantity is returned as an [`Estimate`] carrying its
//! Monte Carlo standard error; trials draw from counter-derived substreams
//! so results are reproducible for a fixed `(seed, trials)` pair.

use std::f64::consts::{LN_2, PI};
use std::fmt;

use rand::Rng;
use serde::Serialize;

use crate::cxmat::{CMat, Complex64, MatError};
use crate::randmat::{cscg, sample_channel, ChaCha8Rng, FadingLaw, Link, RandError, RngStream};
use crate::region::{AntennaConfig, HalfPlane};

/// Errors from the estimators.
#[derive(Debug, Clone, PartialEq)]
pub enum CapacityError {
    Mat(MatError),
    Rand(RandError),
    /// Linear SNR must be strictly positive.
    BadSnr { gamma: f64 },
    /// At least one trial is required.
    NoTrials,
    /// Slope extraction needs at least two distinct SNR points.
    TooFewPoints { got: usize },
    /// Log-det accumulation cannot mix links into different receivers.
    MixedReceivers,
    /// No links selected.
    NoLinks,
    /// Product constellation would be too large to enumerate.
    ConstellationTooLarge { size: usize, dims: usize },
    /// Constellation needs at least one point and finite energy.
    BadConstellation,
    /// Quadrature arguments must be nonnegative.
    NegativeArgument { value: f64 },
}

impl fmt::Display for CapacityError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CapacityError::Mat(e) => write!(f, "{e}"),
            CapacityError::Rand(e) => write!(f, "{e}"),
            CapacityError::BadSnr { gamma } => write!(f, "SNR must be positive, got {gamma}"),
            CapacityError::NoTrials => write!(f, "at least one trial is required"),
            CapacityError::TooFewPoints { got } => {
                write!(f, "slope needs >= 2 distinct SNR points, got {got}")
            }
            CapacityError::MixedReceivers => {
                write!(f, "selected links terminate at different receivers")
            }
            CapacityError::NoLinks => write!(f, "no links selected"),
            CapacityError::ConstellationTooLarge { size, dims } => write!(
                f,
                "constellation of {size} points on {dims} antennas is too large"
            ),
            CapacityError::BadConstellation => {
                write!(f, "constellation must be nonempty with finite positive energy")
            }
            CapacityError::NegativeArgument { value } => {
                write!(f, "argument must be nonnegative, got {value}")
            }
        }
    }
}

impl std::error::Error for CapacityError {}

impl From<MatError> for CapacityError {
    fn from(e: MatError) -> Self {
        CapacityError::Mat(e)
    }
}

impl From<RandError> for CapacityError {
    fn from(e: RandError) -> Self {
        CapacityError::Rand(e)
    }
}

// ---------------------------------------------------------------------------
// Scalar carriers
// ---------------------------------------------------------------------------

/// A linear SNR value γ > 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SnrPoint {
    gamma: f64,
}

impl SnrPoint {
    pub fn from_linear(gamma: f64) -> Result<Self, CapacityError> {
        if gamma <= 0.0 || !gamma.is_finite() {
            return Err(CapacityError::BadSnr { gamma });
        }
        Ok(SnrPoint { gamma })
    }

    /// γ = 10^(dB/10).
    pub fn from_db(db: f64) -> Self {
        SnrPoint {
            gamma: 10f64.powf(db / 10.0),
        }
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn db(&self) -> f64 {
        10.0 * self.gamma.log10()
    }
}

/// A Monte Carlo scalar: sample mean (bits unless noted), standard error,
/// and trial count.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate {
    pub mean: f64,
    pub std_err: f64,
    pub trials: u64,
}

impl Estimate {
    pub fn from_samples(samples: &[f64]) -> Self {
        let n = samples.len();
        assert!(n >= 1, "estimate needs at least one sample");
        let mean = samples.iter().sum::<f64>() / n as f64;
        let std_err = if n < 2 {
            0.0
        } else {
            let var = samples
                .iter()
                .map(|x| (x - mean) * (x - mean))
                .sum::<f64>()
                / (n as f64 - 1.0);
            (var / n as f64).sqrt()
        };
        Estimate {
            mean,
            std_err,
            trials: n as u64,
        }
    }

    pub fn scale(&self, k: f64) -> Estimate {
        Estimate {
            mean: self.mean * k,
            std_err: self.std_err * k.abs(),
            trials: self.trials,
        }
    }

    /// Difference of independent estimates with error propagation.
    pub fn sub_independent(&self, other: &Estimate) -> Estimate {
        Estimate {
            mean: self.mean - other.mean,
            std_err: (self.std_err * self.std_err + other.std_err * other.std_err).sqrt(),
            trials: self.trials.min(other.trials),
        }
    }

    /// |Δmean| ≤ n_sigma · combined standard error.
    pub fn agrees_with(&self, other: &Estimate, n_sigma: f64) -> bool {
        let combined = (self.std_err * self.std_err + other.std_err * other.std_err).sqrt();
        (self.mean - other.mean).abs() <= n_sigma * combined
    }
}

/// An achievable rate pair in bits per channel use.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RatePair {
    pub r1: f64,
    pub r2: f64,
}

impl RatePair {
    pub fn new(r1: f64, r2: f64) -> Self {
        RatePair { r1, r2 }
    }
}

/// The additive gap constants: C* plus the three amplitude-bound terms and
/// their weighted total Δ = C* + Δ1 + [min(M2,N1)/min(M2,N2)]·Δ2.
#[derive(Debug, Clone, Serialize)]
pub struct GapConstants {
    pub c_star: f64,
    pub delta1: Estimate,
    pub delta2: Estimate,
    pub delta3: Estimate,
    pub delta_total: Estimate,
}

// ---------------------------------------------------------------------------
// Closed-form scalars
// ---------------------------------------------------------------------------

/// The "Gaussian input is not too bad" gap for an M-input N-output link:
/// min(M,N)·log2(1 + M/min(M,N)) bits.
pub fn c_star(m: usize, n: usize) -> f64 {
    let k = m.min(n) as f64;
    k * (1.0 + m as f64 / k).log2()
}

// ---------------------------------------------------------------------------
// Ergodic log-det estimators
// ---------------------------------------------------------------------------

fn check_trials(trials: u64) -> Result<(), CapacityError> {
    if trials == 0 {
        Err(CapacityError::NoTrials)
    } else {
        Ok(())
    }
}

fn logdet_accumulated(
    draw: &crate::randmat::ChannelDraw,
    cfg: &AntennaConfig,
    weighted_links: &[(Link, f64)],
    gamma: f64,
    n_rx: usize,
) -> Result<f64, CapacityError> {
    let mut acc = CMat::identity(n_rx);
    for &(link, weight) in weighted_links {
        let h = draw.link(link);
        let (_, m_t) = link.dims(cfg);
        let scaled = h.aat().scale(weight * gamma / m_t as f64);
        acc = acc.add(&scaled)?;
    }
    Ok(acc.logdet_hpd()?)
}

/// Monte Carlo mean of log2 det(I + Σ w·(γ/M_t)·H H†) over channel draws,
/// summed over the selected links. All links must terminate at the same
/// receiver.
pub fn ergodic_logdet_mi(
    stream: &RngStream,
    cfg: &AntennaConfig,
    law: &FadingLaw,
    link_weights: &[(Link, f64)],
    snr: SnrPoint,
    trials: u64,
) -> Result<Estimate, CapacityError> {
    check_trials(trials)?;
    if link_weights.is_empty() {
        return Err(CapacityError::NoLinks);
    }
    let rx = link_weights[0].0.rx();
    if link_weights.iter().any(|(l, _)| l.rx() != rx) {
        return Err(CapacityError::MixedReceivers);
    }
    let n_rx = if rx == 1 { cfg.n1 } else { cfg.n2 };
    let mut samples = Vec::with_capacity(trials as usize);
    for t in 0..trials {
        let draw = sample_channel(&stream.substream(t), cfg, law)?;
        samples.push(logdet_accumulated(
            &draw,
            cfg,
            link_weights,
            snr.gamma(),
            n_rx,
        )?);
    }
    Ok(Estimate::from_samples(&samples))
}

/// The Gaussian-input MAC rate bounds at one receiver.
#[derive(Debug, Clone, Serialize)]
pub struct MacPentagon {
    pub receiver: usize,
    /// R1 ≤ E log det(I + (γ/M1)·H_r1 H_r1†)
    pub r1_max: Estimate,
    /// R2 ≤ E log det(I + (γ/M2)·H_r2 H_r2†)
    pub r2_max: Estimate,
    /// R1 + R2 ≤ E log det(I + both)
    pub sum_max: Estimate,
}

impl MacPentagon {
    pub fn halfplanes(&self) -> Vec<HalfPlane> {
        vec![
            HalfPlane::new(1.0, 0.0, self.r1_max.mean),
            HalfPlane::new(0.0, 1.0, self.r2_max.mean),
            HalfPlane::new(1.0, 1.0, self.sum_max.mean),
        ]
    }
}

/// Both receivers' MAC pentagons computed from one set of channel draws.
#[derive(Debug, Clone, Serialize)]
pub struct MacPair {
    pub rx1: MacPentagon,
    pub rx2: MacPentagon,
}

impl MacPair {
    /// Effective bounds (a, b, s) of the pentagon intersection.
    pub fn intersection_bounds(&self) -> (f64, f64, f64) {
        let a = self.rx1.r1_max.mean.min(self.rx2.r1_max.mean);
        let b = self.rx1.r2_max.mean.min(self.rx2.r2_max.mean);
        let s = self.rx1.sum_max.mean.min(self.rx2.sum_max.mean).min(a + b);
        (a, b, s)
    }

    /// The two dominant-face corners of the pentagon intersection.
    pub fn intersection_corners(&self) -> [RatePair; 2] {
        let (a, b, s) = self.intersection_bounds();
        [
            RatePair::new(a.min(s), (s - a).clamp(0.0, b)),
            RatePair::new((s - b).clamp(0.0, a), b.min(s)),
        ]
    }
}

fn mac_quantities(
    draw: &crate::randmat::ChannelDraw,
    cfg: &AntennaConfig,
    receiver: usize,
    gamma: f64,
) -> Result<(f64, f64, f64), CapacityError> {
    let (l1, l2, n_rx) = if receiver == 1 {
        (Link::Rx1Tx1, Link::Rx1Tx2, cfg.n1)
    } else {
        (Link::Rx2Tx1, Link::Rx2Tx2, cfg.n2)
    };
    let e1 = logdet_accumulated(draw, cfg, &[(l1, 1.0)], gamma, n_rx)?;
    let e2 = logdet_accumulated(draw, cfg, &[(l2, 1.0)], gamma, n_rx)?;
    let e12 = logdet_accumulated(draw, cfg, &[(l1, 1.0), (l2, 1.0)], gamma, n_rx)?;
    Ok((e1, e2, e12))
}

/// The Gaussian-input MAC pentagon at the given receiver; the three bounds
/// share channel draws, so per-draw submodularity carries over to the means.
pub fn mac_pentagon(
    stream: &RngStream,
    cfg: &AntennaConfig,
    law: &FadingLaw,
    receiver: usize,
    snr: SnrPoint,
    trials: u64,
) -> Result<MacPentagon, CapacityError> {
    check_trials(trials)?;
    let mut s1 = Vec::with_capacity(trials as usize);
    let mut s2 = Vec::with_capacity(trials as usize);
    let mut s12 = Vec::with_capacity(trials as usize);
    for t in 0..trials {
        let draw = sample_channel(&stream.substream(t), cfg, law)?;
        let (e1, e2, e12) = mac_quantities(&draw, cfg, receiver, snr.gamma())?;
        s1.push(e1);
        s2.push(e2);
        s12.push(e12);
    }
    Ok(MacPentagon {
        receiver,
        r1_max: Estimate::from_samples(&s1),
        r2_max: Estimate::from_samples(&s2),
        sum_max: Estimate::from_samples(&s12),
    })
}

/// The MAC pentagon as half-planes in the (R1, R2) plane.
pub fn mac_region_at_snr(
    stream: &RngStream,
    cfg: &AntennaConfig,
    law: &FadingLaw,
    receiver: usize,
    snr: SnrPoint,
    trials: u64,
) -> Result<Vec<HalfPlane>, CapacityError> {
    Ok(mac_pentagon(stream, cfg, law, receiver, snr, trials)?.halfplanes())
}

/// Both pentagons from a single set of draws.
pub fn mac_pair_at_snr(
    stream: &RngStream,
    cfg: &AntennaConfig,
    law: &FadingLaw,
    snr: SnrPoint,
    trials: u64,
) -> Result<MacPair, CapacityError> {
    check_trials(trials)?;
    let n = trials as usize;
    let mut acc: [Vec<f64>; 6] = std::array::from_fn(|_| Vec::with_capacity(n));
    for t in 0..trials {
        let draw = sample_channel(&stream.substream(t), cfg, law)?;
        let (a1, b1, s1) = mac_quantities(&draw, cfg, 1, snr.gamma())?;
        let (a2, b2, s2) = mac_quantities(&draw, cfg, 2, snr.gamma())?;
        acc[0].push(a1);
        acc[1].push(b1);
        acc[2].push(s1);
        acc[3].push(a2);
        acc[4].push(b2);
        acc[5].push(s2);
    }
    Ok(MacPair {
        rx1: MacPentagon {
            receiver: 1,
            r1_max: Estimate::from_samples(&acc[0]),
            r2_max: Estimate::from_samples(&acc[1]),
            sum_max: Estimate::from_samples(&acc[2]),
        },
        rx2: MacPentagon {
            receiver: 2,
            r1_max: Estimate::from_samples(&acc[3]),
            r2_max: Estimate::from_samples(&acc[4]),
            sum_max: Estimate::from_samples(&acc[5]),
        },
    })
}

fn convex_hull(points: &mut Vec<RatePair>) -> Vec<RatePair> {
    points.sort_by(|p, q| {
        p.r1.partial_cmp(&q.r1)
            .unwrap()
            .then(p.r2.partial_cmp(&q.r2).unwrap())
    });
    points.dedup_by(|p, q| (p.r1 - q.r1).abs() < 1e-12 && (p.r2 - q.r2).abs() < 1e-12);
    if points.len() <= 2 {
        return points.clone();
    }
    let cross = |o: &RatePair, a: &RatePair, b: &RatePair| {
        (a.r1 - o.r1) * (b.r2 - o.r2) - (a.r2 - o.r2) * (b.r1 - o.r1)
    };
    let mut lower: Vec<RatePair> = Vec::new();
    for p in points.iter() {
        while lower.len() >= 2
            && cross(&lower[lower.len() - 2], &lower[lower.len() - 1], p) <= 1e-12
        {
            lower.pop();
        }
        lower.push(*p);
    }
    let mut upper: Vec<RatePair> = Vec::new();
    for p in points.iter().rev() {
        while upper.len() >= 2
            && cross(&upper[upper.len() - 2], &upper[upper.len() - 1], p) <= 1e-12
        {
            upper.pop();
        }
        upper.push(*p);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    let start = (0..lower.len())
        .min_by(|&i, &j| {
            lower[i]
                .r1
                .partial_cmp(&lower[j].r1)
                .unwrap()
                .then(lower[i].r2.partial_cmp(&lower[j].r2).unwrap())
        })
        .unwrap_or(0);
    lower.rotate_left(start);
    lower
}

/// Hull vertices of the achievable region implied by a computed MAC pair:
/// time sharing over single-user operation and the common-message
/// MAC-intersection corners.
pub fn achievable_hull(pair: &MacPair) -> Vec<RatePair> {
    let c1 = pair.rx1.r1_max.mean;
    let c2 = pair.rx2.r2_max.mean;
    let corners = pair.intersection_corners();
    let mut pts = vec![
        RatePair::new(0.0, 0.0),
        RatePair::new(c1, 0.0),
        RatePair::new(0.0, c2),
        corners[0],
        corners[1],
    ];
    convex_hull(&mut pts)
}

/// Hull vertices of the finite-SNR achievable region at one SNR.
pub fn achievable_region_at_snr(
    stream: &RngStream,
    cfg: &AntennaConfig,
    law: &FadingLaw,
    snr: SnrPoint,
    trials: u64,
) -> Result<Vec<RatePair>, CapacityError> {
    Ok(achievable_hull(&mac_pair_at_snr(stream, cfg, law, snr, trials)?))
}

/// Least-squares slope of rate against log2(1+γ) over the provided
/// `(gamma, rate)` grid — the finite-SNR DoF read-out.
pub fn dof_slope(points: &[(f64, f64)]) -> Result<f64, CapacityError> {
    if points.len() < 2 {
        return Err(CapacityError::TooFewPoints { got: points.len() });
    }
    let xs: Vec<f64> = points.iter().map(|(g, _)| (1.0 + g).log2()).collect();
    let ys: Vec<f64> = points.iter().map(|(_, r)| *r).collect();
    let n = xs.len() as f64;
    let xbar = xs.iter().sum::<f64>() / n;
    let ybar = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - xbar) * (x - xbar)).sum();
    if sxx < 1e-12 {
        return Err(CapacityError::TooFewPoints { got: 1 });
    }
    let sxy: f64 = xs
        .iter()
        .zip(ys.iter())
        .map(|(x, y)| (x - xbar) * (y - ybar))
        .sum();
    Ok(sxy / sxx)
}

// ---------------------------------------------------------------------------
// Conditional Gaussian mutual information (closed form)
// ---------------------------------------------------------------------------

/// Monte Carlo average of the conditional Gaussian mutual-information
/// closed form
///
/// E log det([Σ1 0; 0 Σ2] + (γ/M)·[A;B][A† B†]) − E log det(Σ2 + (γ/M)·B B†) − log det Σ1
///
/// over draws of `(A, B)`. `B` may have zero rows, which removes the
/// conditioning entirely.
pub fn conditional_gaussian_mi<F>(
    stream: &RngStream,
    mut sample_ab: F,
    sigma1: &CMat,
    sigma2: &CMat,
    snr: SnrPoint,
    m: usize,
    trials: u64,
) -> Result<Estimate, CapacityError>
where
    F: FnMut(&mut ChaCha8Rng) -> (CMat, CMat),
{
    check_trials(trials)?;
    let scale = snr.gamma() / m as f64;
    let logdet_sigma1 = sigma1.logdet_hpd()?;
    let mut samples = Vec::with_capacity(trials as usize);
    for t in 0..trials {
        let mut rng = stream.substream(t).rng();
        let (a, b) = sample_ab(&mut rng);
        let stacked = a.vstack(&b)?;
        let joint = CMat::block_diag(&[sigma1.clone(), sigma2.clone()])?
            .add(&stacked.aat().scale(scale))?;
        let cond = sigma2.add(&b.aat().scale(scale))?;
        samples.push(joint.logdet_hpd()? - cond.logdet_hpd()? - logdet_sigma1);
    }
    Ok(Estimate::from_samples(&samples))
}

// ---------------------------------------------------------------------------
// Discrete-input mutual information
// ---------------------------------------------------------------------------

/// A finite constellation on one antenna, normalized to unit average
/// energy at construction.
#[derive(Debug, Clone)]
pub struct Constellation {
    points: Vec<Complex64>,
}

impl Constellation {
    pub fn new(points: Vec<Complex64>) -> Result<Self, CapacityError> {
        if points.is_empty() {
            return Err(CapacityError::BadConstellation);
        }
        let energy: f64 =
            points.iter().map(|p| p.norm_sqr()).sum::<f64>() / points.len() as f64;
        if energy <= 0.0 || !energy.is_finite() {
            return Err(CapacityError::BadConstellation);
        }
        let scale = energy.sqrt().recip();
        Ok(Constellation {
            points: points.iter().map(|p| p * scale).collect(),
        })
    }

    /// {+1, −1}.
    pub fn bpsk() -> Self {
        Constellation::new(vec![Complex64::new(1.0, 0.0), Complex64::new(-1.0, 0.0)]).unwrap()
    }

    /// {(±1 ± i)/√2}.
    pub fn qpsk() -> Self {
        Constellation::new(vec![
            Complex64::new(1.0, 1.0),
            Complex64::new(1.0, -1.0),
            Complex64::new(-1.0, 1.0),
            Complex64::new(-1.0, -1.0),
        ])
        .unwrap()
    }

    pub fn points(&self) -> &[Complex64] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// All |S|^m input vectors scaled to per-codeword power γ (each
    /// antenna carries power γ/m).
    fn product_codebook(
        &self,
        m: usize,
        gamma: f64,
    ) -> Result<Vec<Vec<Complex64>>, CapacityError> {
        if m == 0 || m > 2 || self.points.len() > 16 {
            return Err(CapacityError::ConstellationTooLarge {
                size: self.points.len(),
                dims: m,
            });
        }
        let amp = (gamma / m as f64).sqrt();
        let mut book = Vec::with_capacity(self.points.len().pow(m as u32));
        if m == 1 {
            for &p in &self.points {
                book.push(vec![p * amp]);
            }
        } else {
            for &p in &self.points {
                for &q in &self.points {
                    book.push(vec![p * amp, q * amp]);
                }
            }
        }
        Ok(book)
    }
}

fn apply_channel(h: &CMat, x: &[Complex64]) -> Vec<Complex64> {
    let mut y = vec![Complex64::ZERO; h.rows()];
    for (i, yi) in y.iter_mut().enumerate() {
        let mut s = Complex64::ZERO;
        for (j, xj) in x.iter().enumerate() {
            s += h[(i, j)] * xj;
        }
        *yi = s;
    }
    y
}

fn dist_sq(y: &[Complex64], z: &[Complex64]) -> f64 {
    y.iter()
        .zip(z.iter())
        .map(|(a, b)| (a - b).norm_sqr())
        .sum()
}

/// log2 [ p(y|x_sent) / ((1/J)·Σ_j p(y|x_j)) ] under unit-variance CSCG
/// noise; the per-trial information density of a uniform discrete input.
fn info_density_bits(y: &[Complex64], outputs: &[Vec<Complex64>], sent: usize) -> f64 {
    let neg_d: Vec<f64> = outputs.iter().map(|hx| -dist_sq(y, hx)).collect();
    let max = neg_d.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + neg_d.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
    let j = outputs.len() as f64;
    (neg_d[sent] + j.ln() - lse) / LN_2
}

/// Monte Carlo estimate of I(Y;X) in bits for X uniform on the product
/// constellation through `Y = H X + u`, `u ~ CN(0, I)`, with H drawn per
/// trial from `sample_h` (the receiver knows H).
pub fn discrete_input_mi<F>(
    stream: &RngStream,
    mut sample_h: F,
    constellation: &Constellation,
    snr: SnrPoint,
    m: usize,
    trials: u64,
) -> Result<Estimate, CapacityError>
where
    F: FnMut(&mut ChaCha8Rng) -> CMat,
{
    check_trials(trials)?;
    let book = constellation.product_codebook(m, snr.gamma())?;
    let mut samples = Vec::with_capacity(trials as usize);
    for t in 0..trials {
        let mut rng = stream.substream(t).rng();
        let h = sample_h(&mut rng);
        let sent = rng.random_range(0..book.len());
        let mut y = apply_channel(&h, &book[sent]);
        for yi in y.iter_mut() {
            *yi += cscg(&mut rng);
        }
        let outputs: Vec<Vec<Complex64>> = book.iter().map(|x| apply_channel(&h, x)).collect();
        samples.push(info_density_bits(&y, &outputs, sent));
    }
    Ok(Estimate::from_samples(&samples))
}

/// Monte Carlo estimate of the conditional mutual information
/// I(Y;X | Z, A, B) for X uniform on the product constellation through
/// `Y = A X + u1`, `Z = B X + u2`, evaluated as the per-trial difference
/// I(Y,Z;X) − I(Z;X) (chain rule), which keeps the two terms correlated
/// and the variance low.
pub fn discrete_conditional_mi<F>(
    stream: &RngStream,
    mut sample_ab: F,
    constellation: &Constellation,
    snr: SnrPoint,
    m: usize,
    trials: u64,
) -> Result<Estimate, CapacityError>
where
    F: FnMut(&mut ChaCha8Rng) -> (CMat, CMat),
{
    check_trials(trials)?;
    let book = constellation.product_codebook(m, snr.gamma())?;
    let mut samples = Vec::with_capacity(trials as usize);
    for t in 0..trials {
        let mut rng = stream.substream(t).rng();
        let (a, b) = sample_ab(&mut rng);
        let stacked = a.vstack(&b)?;
        let sent = rng.random_range(0..book.len());
        let mut y = apply_channel(&a, &book[sent]);
        for yi in y.iter_mut() {
            *yi += cscg(&mut rng);
        }
        let mut z = apply_channel(&b, &book[sent]);
        for zi in z.iter_mut() {
            *zi += cscg(&mut rng);
        }
        let mut w = y.clone();
        w.extend_from_slice(&z);

        let joint_outputs: Vec<Vec<Complex64>> =
            book.iter().map(|x| apply_channel(&stacked, x)).collect();
        let z_outputs: Vec<Vec<Complex64>> =
            book.iter().map(|x| apply_channel(&b, x)).collect();
        let bits_joint = info_density_bits(&w, &joint_outputs, sent);
        let bits_z = info_density_bits(&z, &z_outputs, sent);
        samples.push(bits_joint - bits_z);
    }
    Ok(Estimate::from_samples(&samples))
}

fn forward_solve(l: &CMat, v: &[Complex64]) -> Vec<Complex64> {
    let n = l.rows();
    let mut y = vec![Complex64::ZERO; n];
    for i in 0..n {
        let mut s = v[i];
        for k in 0..i {
            s -= l[(i, k)] * y[k];
        }
        y[i] = s / l[(i, i)].re;
    }
    y
}

/// ln N_C(v; 0, Σ) up to the −n·ln π constant, via a Cholesky factor of Σ.
fn ln_gaussian_unnormalized(l_chol: &CMat, v: &[Complex64], logdet_bits: f64) -> f64 {
    let y = forward_solve(l_chol, v);
    let quad: f64 = y.iter().map(|z| z.norm_sqr()).sum();
    -quad - logdet_bits * LN_2
}

/// Sampling-based estimate of the Gaussian-input conditional mutual
/// information I(Y;X | Z, A, B): draws `x ~ CN(0, (γ/M) I)` and averages
/// the information density computed from the exact Gaussian conditional
/// and marginal densities. An independent cross-check of
/// [`conditional_gaussian_mi`], which goes through the determinant
/// identity instead.
pub fn gaussian_conditional_mi_sampled<F>(
    stream: &RngStream,
    mut sample_ab: F,
    snr: SnrPoint,
    m: usize,
    trials: u64,
) -> Result<Estimate, CapacityError>
where
    F: FnMut(&mut ChaCha8Rng) -> (CMat, CMat),
{
    check_trials(trials)?;
    let scale = snr.gamma() / m as f64;
    let amp = scale.sqrt();
    let mut samples = Vec::with_capacity(trials as usize);
    for t in 0..trials {
        let mut rng = stream.substream(t).rng();
        let (a, b) = sample_ab(&mut rng);
        let stacked = a.vstack(&b)?;
        let (n1, n2) = (a.rows(), b.rows());

        let x: Vec<Complex64> = (0..m).map(|_| cscg(&mut rng) * amp).collect();
        let mut y = apply_channel(&a, &x);
        for yi in y.iter_mut() {
            *yi += cscg(&mut rng);
        }
        let mut z = apply_channel(&b, &x);
        for zi in z.iter_mut() {
            *zi += cscg(&mut rng);
        }
        let mut w = y.clone();
        w.extend_from_slice(&z);

        // given x, outputs are white around the channel mean
        let sx = apply_channel(&stacked, &x);
        let bx = apply_channel(&b, &x);
        let ln_w_given_x = -w
            .iter()
            .zip(sx.iter())
            .map(|(p, q)| (p - q).norm_sqr())
            .sum::<f64>();
        let ln_z_given_x = -z
            .iter()
            .zip(bx.iter())
            .map(|(p, q)| (p - q).norm_sqr())
            .sum::<f64>();

        // marginals are zero-mean Gaussian with the lifted covariance
        let cov_w = CMat::identity(n1 + n2).add(&stacked.aat().scale(scale))?;
        let cov_z = CMat::identity(n2).add(&b.aat().scale(scale))?;
        let ld_w = cov_w.logdet_hpd()?;
        let ld_z = cov_z.logdet_hpd()?;
        let ln_w = ln_gaussian_unnormalized(&cov_w.cholesky()?, &w, ld_w);
        let ln_z = ln_gaussian_unnormalized(&cov_z.cholesky()?, &z, ld_z);

        let nats = (ln_w_given_x - ln_w) - (ln_z_given_x - ln_z);
        samples.push(nats / LN_2);
    }
    Ok(Estimate::from_samples(&samples))
}

// ---------------------------------------------------------------------------
// I-MMSE utilities
// ---------------------------------------------------------------------------

fn simpson_adaptive<F: Fn(f64) -> f64 + Copy>(f: F, a: f64, b: f64, tol: f64) -> f64 {
    fn simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> f64 {
        let c = 0.5 * (a + b);
        (b - a) / 6.0 * (f(a) + 4.0 * f(c) + f(b))
    }
    fn recurse<F: Fn(f64) -> f64>(
        f: &F,
        a: f64,
        b: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let c = 0.5 * (a + b);
        let left = simpson(f, a, c);
        let right = simpson(f, c, b);
        if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
            left + right + (left + right - whole) / 15.0
        } else {
            recurse(f, a, c, left, tol / 2.0, depth - 1)
                + recurse(f, c, b, right, tol / 2.0, depth - 1)
        }
    }
    if a == b {
        return 0.0;
    }
    recurse(&f, a, b, simpson(&f, a, b), tol, 40)
}

/// Expectation of g(N) for N ~ N(0,1) by composite Simpson on [−12, 12].
fn gauss_expect<F: Fn(f64) -> f64 + Copy>(g: F) -> f64 {
    let steps = 2400;
    let lo = -12.0f64;
    let hi = 12.0f64;
    let h = (hi - lo) / steps as f64;
    let phi = |x: f64| (-0.5 * x * x).exp() / (2.0 * PI).sqrt();
    let mut acc = 0.0;
    for k in 0..steps {
        let x0 = lo + k as f64 * h;
        let x1 = x0 + h;
        let xm = 0.5 * (x0 + x1);
        acc += h / 6.0 * (phi(x0) * g(x0) + 4.0 * phi(xm) * g(xm) + phi(x1) * g(x1));
    }
    acc
}

/// MMSE of a ±1 input over the real AWGN channel y = √s·x + n, n ~ N(0,1).
fn bpsk_mmse_real(s: f64) -> f64 {
    if s == 0.0 {
        return 1.0;
    }
    let rs = s.sqrt();
    1.0 - gauss_expect(move |n| (s + rs * n).tanh())
}

/// Mutual information (nats) of a ±1 input over the same real channel.
fn bpsk_mi_real_nats(s: f64) -> f64 {
    if s == 0.0 {
        return 0.0;
    }
    let rs = s.sqrt();
    LN_2 - gauss_expect(move |n| {
        let u = -2.0 * s - 2.0 * rs * n;
        // ln(1 + e^u), stable for both signs of u
        if u > 0.0 {
            u + (-u).exp().ln_1p()
        } else {
            u.exp().ln_1p()
        }
    })
}

/// BPSK mutual information in bits over the complex channel
/// y = x + u, x = ±√γ, u ~ CN(0,1) — the quadrature oracle used to
/// cross-check the Monte Carlo estimator.
pub fn bpsk_awgn_mi_bits(gamma: f64) -> f64 {
    bpsk_mi_real_nats(2.0 * gamma) / LN_2
}

/// Gaussian-input check of the mutual-information/MMSE identity on the
/// scalar complex channel y = √t·x + u with x ~ CN(0, ρ).
///
/// Returns `(mi_direct, mi_integrated)` in nats: ln(1+tρ) against the
/// quadrature of ∫₀ᵗ ρ/(1+τρ) dτ.
pub fn immse_check(rho: f64, t: f64) -> Result<(f64, f64), CapacityError> {
    if rho < 0.0 {
        return Err(CapacityError::NegativeArgument { value: rho });
    }
    if t < 0.0 {
        return Err(CapacityError::NegativeArgument { value: t });
    }
    let direct = (1.0 + t * rho).ln();
    let integrated = simpson_adaptive(move |tau| rho / (1.0 + tau * rho), 0.0, t, 1e-8);
    Ok((direct, integrated))
}

/// BPSK variant of the identity check: x = ±√ρ over y = √t·x + u. Both
/// sides go through the known scalar BPSK curves under quadrature.
pub fn immse_check_bpsk(rho: f64, t: f64) -> Result<(f64, f64), CapacityError> {
    if rho < 0.0 {
        return Err(CapacityError::NegativeArgument { value: rho });
    }
    if t < 0.0 {
        return Err(CapacityError::NegativeArgument { value: t });
    }
    // the real sufficient statistic sees SNR s = 2ρt, and the complex
    // I-MMSE integrand is ρ·mmse(2ρτ)
    let direct = bpsk_mi_real_nats(2.0 * rho * t);
    let integrated =
        simpson_adaptive(move |tau| rho * bpsk_mmse_real(2.0 * rho * tau), 0.0, t, 1e-8);
    Ok((direct, integrated))
}

// ---------------------------------------------------------------------------
// Gap constants
// ---------------------------------------------------------------------------

#[inline]
fn log2_plus(x: f64) -> f64 {
    x.max(1.0).log2()
}

/// Monte Carlo estimates of the amplitude-bound constants from sampled
/// singular-value matrices (log⁺ x = log2 max(1, x)).
pub fn gap_constants(
    stream: &RngStream,
    cfg: &AntennaConfig,
    law: &FadingLaw,
    trials: u64,
) -> Result<GapConstants, CapacityError> {
    check_trials(trials)?;
    let cstar = c_star(cfg.m1, cfg.n1);
    let ratio = cfg.m2.min(cfg.n1) as f64 / cfg.m2.min(cfg.n2) as f64;
    let n = trials as usize;
    let mut d1 = Vec::with_capacity(n);
    let mut d2 = Vec::with_capacity(n);
    let mut d3 = Vec::with_capacity(n);
    let mut dt = Vec::with_capacity(n);
    for t in 0..trials {
        let draw = sample_channel(&stream.substream(t), cfg, law)?;
        let sv12 = draw.h12.singular_values()?;
        let sv22 = draw.h22.singular_values()?;
        let det12: f64 = sv12.iter().product();
        let det12_min: f64 = sv12.iter().map(|&s| s.min(1.0)).product();
        let det22: f64 = sv22.iter().product();
        let det22_min: f64 = sv22.iter().map(|&s| s.min(1.0)).product();
        let v1 = 2.0 * log2_plus(1.0 / det12_min);
        let v2 = 2.0 * log2_plus(det22) + 2.0 * log2_plus(1.0 / det22_min);
        let v3 = 2.0 * log2_plus(det12) + 2.0 * log2_plus(1.0 / det12_min);
        d1.push(v1);
        d2.push(v2);
        d3.push(v3);
        dt.push(cstar + v1 + ratio * v2);
    }
    Ok(GapConstants {
        c_star: cstar,
        delta1: Estimate::from_samples(&d1),
        delta2: Estimate::from_samples(&d2),
        delta3: Estimate::from_samples(&d3),
        delta_total: Estimate::from_samples(&dt),
    })
}
