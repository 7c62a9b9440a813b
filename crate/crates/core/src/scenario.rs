//! Scenario generation: device data, nomographic pre/post-processing,
//! sample moments and the prior matrices built from them, channel draws and
//! the EsN0 definition.
//!
//! The "two pieces of statistical information" each device reports are its
//! first and second sample moments over one packet. The fusion center turns
//! them into the prior vector `mu_hat`, the diagonal variance matrix `D`
//! and the second-moment matrix `V`; the asynchronous estimators use the
//! length-`ML` tilings of the same quantities.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;

use crate::error::{Error, Result};

/// Minimum spacing between consecutive time offsets accepted by
/// [`ChannelConfig`], as a fraction of the symbol period.
pub const MIN_OFFSET_GAP_FRACTION: f64 = 1e-9;

/// Spacing enforced (by rejection resampling) between offsets drawn by
/// [`draw_channel`], as a fraction of the symbol period.
pub const DRAW_OFFSET_GAP_FRACTION: f64 = 1e-6;

const MAX_OFFSET_DRAW_ATTEMPTS: usize = 1000;

// ---------------------------------------------------------------------------
// Device data and nomographic processing
// ---------------------------------------------------------------------------

/// One device's packet: the raw message `theta` and the pre-processed
/// symbols `s` actually transmitted.
#[derive(Debug, Clone)]
pub struct DeviceData {
    pub theta: Vec<Complex64>,
    pub s: Vec<Complex64>,
}

/// The nomographic function computed over the air: which pre-processing
/// `phi_m` the devices apply and which post-processing `psi` the fusion
/// center applies to the recovered sum.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Nomographic {
    /// `phi(x) = x`, `psi(x) = x / M`.
    ArithmeticMean,
    /// `phi(x) = ln x`, `psi(x) = exp(x / M)`; requires strictly positive
    /// real inputs.
    GeometricMean,
}

/// Draw `M` packets of `L` symbols; real and imaginary parts are i.i.d.
/// uniform over each device's interval, and `theta = s` (identity
/// pre-processing).
pub fn generate_symbols(
    ranges: &[(f64, f64)],
    l: usize,
    rng: &mut impl Rng,
) -> Result<Vec<DeviceData>> {
    generate_symbols_impl(ranges, l, true, rng)
}

/// Real-only variant of [`generate_symbols`] (imaginary parts all zero),
/// kept as a sensitivity switch.
pub fn generate_symbols_real(
    ranges: &[(f64, f64)],
    l: usize,
    rng: &mut impl Rng,
) -> Result<Vec<DeviceData>> {
    generate_symbols_impl(ranges, l, false, rng)
}

fn generate_symbols_impl(
    ranges: &[(f64, f64)],
    l: usize,
    complex_parts: bool,
    rng: &mut impl Rng,
) -> Result<Vec<DeviceData>> {
    if ranges.is_empty() {
        return Err(Error::InvalidInput("generate_symbols: no devices".into()));
    }
    if l < 2 {
        return Err(Error::InvalidInput(format!(
            "generate_symbols: L must be at least 2 so sample variances can be positive, got {l}"
        )));
    }
    for (m, &(a, b)) in ranges.iter().enumerate() {
        if !(a.is_finite() && b.is_finite() && b > a) {
            return Err(Error::InvalidInput(format!(
                "generate_symbols: degenerate interval [{a}, {b}] for device {}",
                m + 1
            )));
        }
    }
    Ok(ranges
        .iter()
        .map(|&(a, b)| {
            let s: Vec<Complex64> = (0..l)
                .map(|_| {
                    let re = rng.random_range(a..b);
                    let im = if complex_parts { rng.random_range(a..b) } else { 0.0 };
                    Complex64::new(re, im)
                })
                .collect();
            DeviceData { theta: s.clone(), s }
        })
        .collect())
}

/// Apply the pre-processing function of `kind` element-wise.
pub fn pre_process(theta: &[Complex64], kind: Nomographic) -> Result<Vec<Complex64>> {
    match kind {
        Nomographic::ArithmeticMean => Ok(theta.to_vec()),
        Nomographic::GeometricMean => theta
            .iter()
            .map(|x| {
                if x.im != 0.0 || x.re <= 0.0 {
                    Err(Error::Domain(format!(
                        "geometric mean requires strictly positive real inputs, got {x}"
                    )))
                } else {
                    Ok(Complex64::new(x.re.ln(), 0.0))
                }
            })
            .collect(),
    }
}

/// Apply the post-processing function of `kind` to an estimated sum.
pub fn post_process(s_plus: &[Complex64], kind: Nomographic, m: usize) -> Result<Vec<Complex64>> {
    if m == 0 {
        return Err(Error::InvalidInput("post_process: M must be positive".into()));
    }
    let m = m as f64;
    Ok(match kind {
        Nomographic::ArithmeticMean => s_plus.iter().map(|x| x / m).collect(),
        Nomographic::GeometricMean => s_plus.iter().map(|x| (x / m).exp()).collect(),
    })
}

// ---------------------------------------------------------------------------
// Sample moments and priors
// ---------------------------------------------------------------------------

/// First and second sample moments of one packet:
/// `e = mean(s)`, `v = mean(|s|^2)`, `d = v - |e|^2`.
///
/// A constant packet (`d = 0`) is rejected: it would break the positive
/// definiteness the LMMSE and SP-MAP estimators rely on.
pub fn sample_moments(s: &[Complex64]) -> Result<(Complex64, f64, f64)> {
    if s.len() < 2 {
        return Err(Error::InvalidInput(format!(
            "sample_moments: need at least 2 symbols, got {}",
            s.len()
        )));
    }
    let l = s.len() as f64;
    let e = s.iter().sum::<Complex64>() / l;
    let v = s.iter().map(|x| x.norm_sqr()).sum::<f64>() / l;
    let d = v - e.norm_sqr();
    if d <= 0.0 {
        return Err(Error::DegeneratePrior(format!(
            "constant symbol sequence: sample variance {d} is not positive"
        )));
    }
    Ok((e, v, d))
}

/// Per-device prior statistics `(E_m, V_m, D_m)` and the matrices the
/// estimators consume.
#[derive(Debug, Clone)]
pub struct PriorMoments {
    e: Vec<Complex64>,
    v: Vec<f64>,
    d: Vec<f64>,
}

impl PriorMoments {
    pub fn num_devices(&self) -> usize {
        self.e.len()
    }

    /// First sample moments `E_m`.
    pub fn e(&self) -> &[Complex64] {
        &self.e
    }

    /// Second sample moments `V_m`.
    pub fn v(&self) -> &[f64] {
        &self.v
    }

    /// Sample variances `D_m = V_m - |E_m|^2`.
    pub fn d(&self) -> &[f64] {
        &self.d
    }

    /// The prior mean vector `mu_hat = [E_1, ..., E_M]^T`.
    pub fn mu_hat(&self) -> DVector<Complex64> {
        DVector::from_iterator(self.e.len(), self.e.iter().cloned())
    }

    /// The diagonal variance matrix `D = diag(D_1, ..., D_M)`.
    pub fn d_mat(&self) -> DMatrix<f64> {
        DMatrix::from_diagonal(&DVector::from_iterator(self.d.len(), self.d.iter().cloned()))
    }

    /// The second-moment matrix `V`: `V_mm = V_m` on the diagonal and
    /// `V_mn = conj(E_m) E_n` off it, i.e. `V = D + conj(mu_hat) mu_hat^T`.
    pub fn v_mat(&self) -> DMatrix<Complex64> {
        let m = self.e.len();
        DMatrix::from_fn(m, m, |r, c| {
            if r == c {
                Complex64::new(self.v[r], 0.0)
            } else {
                self.e[r].conj() * self.e[c]
            }
        })
    }
}

/// Assemble a [`PriorMoments`] from per-device `(e, v, d)` triples.
pub fn build_prior(moments: &[(Complex64, f64, f64)]) -> Result<PriorMoments> {
    if moments.is_empty() {
        return Err(Error::InvalidInput("build_prior: no devices".into()));
    }
    for (m, &(e, v, d)) in moments.iter().enumerate() {
        if !(e.re.is_finite() && e.im.is_finite() && v.is_finite() && d.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "build_prior: non-finite moments for device {}",
                m + 1
            )));
        }
        if d <= 0.0 {
            return Err(Error::DegeneratePrior(format!(
                "device {} has sample variance {d} <= 0",
                m + 1
            )));
        }
        if (d - (v - e.norm_sqr())).abs() > 1e-9 * v.abs().max(1.0) {
            return Err(Error::InvalidInput(format!(
                "build_prior: device {} moments violate D = V - |E|^2",
                m + 1
            )));
        }
    }
    Ok(PriorMoments {
        e: moments.iter().map(|t| t.0).collect(),
        v: moments.iter().map(|t| t.1).collect(),
        d: moments.iter().map(|t| t.2).collect(),
    })
}

/// Moments of a whole scenario: one [`sample_moments`] call per device.
pub fn prior_from_devices(devices: &[DeviceData]) -> Result<PriorMoments> {
    let moments = devices
        .iter()
        .map(|dev| sample_moments(&dev.s))
        .collect::<Result<Vec<_>>>()?;
    build_prior(&moments)
}

/// The length-`ML` tilings used by the asynchronous estimators:
/// `mu_tilde = (E_1..E_M, E_1..E_M, ...)` and the diagonal of
/// `D_tilde = diag(D_1..D_M, D_1..D_M, ...)`.
pub fn build_async_prior(p: &PriorMoments, l: usize) -> (DVector<Complex64>, DVector<f64>) {
    let m = p.num_devices();
    let mu = DVector::from_fn(m * l, |idx, _| p.e[idx % m]);
    let d = DVector::from_fn(m * l, |idx, _| p.d[idx % m]);
    (mu, d)
}

/// The true sample cross-moment matrix `(1/L) sum_i conj(s[i]) s[i]^T` of a
/// set of transmitted packets. Its diagonal equals `V_m`; the off-diagonal
/// entries are what the constructed `V` of [`PriorMoments::v_mat`]
/// idealizes as `conj(E_m) E_n`.
pub fn cross_moment_matrix(devices: &[DeviceData]) -> Result<DMatrix<Complex64>> {
    let m = devices.len();
    if m == 0 {
        return Err(Error::InvalidInput("cross_moment_matrix: no devices".into()));
    }
    let l = devices[0].s.len();
    if devices.iter().any(|d| d.s.len() != l) || l == 0 {
        return Err(Error::DimensionMismatch(
            "cross_moment_matrix: devices must share a positive packet length".into(),
        ));
    }
    let mut v = DMatrix::<Complex64>::zeros(m, m);
    for i in 0..l {
        for r in 0..m {
            for c in 0..m {
                v[(r, c)] += devices[r].s[i].conj() * devices[c].s[i];
            }
        }
    }
    Ok(v / Complex64::new(l as f64, 0.0))
}

// ---------------------------------------------------------------------------
// Channel configuration
// ---------------------------------------------------------------------------

/// Whether a configuration carries time offsets. Synchronous and
/// asynchronous are distinct modes rather than `tau = 0` being a special
/// value, because the matched-filter bank needs strictly positive filter
/// lengths.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChannelMode {
    Synchronous,
    Asynchronous,
}

/// The misalignment state of one transmission: residual gains `h_m`, time
/// offsets `tau_m` (seconds, `tau_1 = 0`, strictly increasing, all below
/// the symbol period), symbol period `T` and noise spectral density `N0`.
#[derive(Debug, Clone)]
pub struct ChannelConfig {
    h: Vec<Complex64>,
    tau: Vec<f64>,
    t: f64,
    n0: f64,
    mode: ChannelMode,
}

impl ChannelConfig {
    /// A synchronous configuration (`tau_m = 0` conceptually; no filter
    /// bank).
    pub fn new_synchronous(h: Vec<Complex64>, t: f64, n0: f64) -> Result<Self> {
        Self::validate_common(&h, t, n0)?;
        let m = h.len();
        Ok(Self { h, tau: vec![0.0; m], t, n0, mode: ChannelMode::Synchronous })
    }

    /// An asynchronous configuration with explicit offsets.
    pub fn new_asynchronous(h: Vec<Complex64>, tau: Vec<f64>, t: f64, n0: f64) -> Result<Self> {
        Self::validate_common(&h, t, n0)?;
        if tau.len() != h.len() {
            return Err(Error::DimensionMismatch(format!(
                "ChannelConfig: {} gains but {} offsets",
                h.len(),
                tau.len()
            )));
        }
        if tau[0] != 0.0 {
            return Err(Error::InvalidInput(format!(
                "ChannelConfig: tau_1 must be 0, got {}",
                tau[0]
            )));
        }
        let min_gap = MIN_OFFSET_GAP_FRACTION * t;
        for w in tau.windows(2) {
            if w[1] - w[0] < min_gap {
                return Err(Error::InvalidInput(format!(
                    "ChannelConfig: offsets {} and {} are closer than {min_gap}",
                    w[0], w[1]
                )));
            }
        }
        if t - tau[tau.len() - 1] < min_gap {
            return Err(Error::InvalidInput(format!(
                "ChannelConfig: last offset {} too close to the symbol period {t}",
                tau[tau.len() - 1]
            )));
        }
        Ok(Self { h, tau, t, n0, mode: ChannelMode::Asynchronous })
    }

    fn validate_common(h: &[Complex64], t: f64, n0: f64) -> Result<()> {
        if h.is_empty() {
            return Err(Error::InvalidInput("ChannelConfig: no devices".into()));
        }
        if h.iter().any(|x| !(x.re.is_finite() && x.im.is_finite())) {
            return Err(Error::InvalidInput("ChannelConfig: non-finite gain".into()));
        }
        if !(t > 0.0) {
            return Err(Error::InvalidInput(format!("ChannelConfig: T must be positive, got {t}")));
        }
        if !(n0 >= 0.0) {
            return Err(Error::InvalidInput(format!(
                "ChannelConfig: N0 must be nonnegative, got {n0}"
            )));
        }
        Ok(())
    }

    pub fn num_devices(&self) -> usize {
        self.h.len()
    }

    pub fn h(&self) -> &[Complex64] {
        &self.h
    }

    pub fn tau(&self) -> &[f64] {
        &self.tau
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn n0(&self) -> f64 {
        self.n0
    }

    pub fn mode(&self) -> ChannelMode {
        self.mode
    }

    /// Same configuration with a different noise density (noise is
    /// recalibrated per EsN0 grid point).
    pub fn with_n0(&self, n0: f64) -> Result<Self> {
        if !(n0 >= 0.0) {
            return Err(Error::InvalidInput(format!(
                "ChannelConfig: N0 must be nonnegative, got {n0}"
            )));
        }
        let mut out = self.clone();
        out.n0 = n0;
        Ok(out)
    }

    /// Matched-filter lengths `d_k = tau_{k+1} - tau_k` with
    /// `tau_{M+1} = T`; they sum to `T`. Asynchronous mode only.
    pub fn filter_lengths(&self) -> Result<Vec<f64>> {
        if self.mode != ChannelMode::Asynchronous {
            return Err(Error::InvalidInput(
                "filter_lengths: configuration is not asynchronous".into(),
            ));
        }
        let m = self.tau.len();
        Ok((0..m)
            .map(|k| {
                let next = if k + 1 < m { self.tau[k + 1] } else { self.t };
                next - self.tau[k]
            })
            .collect())
    }
}

/// Draw a channel: unit-modulus gains with phases uniform in
/// `(0, phi_max)`, the last offset fixed by `d_M_target` (as a fraction of
/// `T`) and the remaining offsets uniform in `(0, tau_M)`.
///
/// `d_M_target = 1` means no time misalignment and yields a synchronous
/// configuration. Offset draws closer than `1e-6 T` are rejected and
/// redrawn (up to 1000 attempts).
pub fn draw_channel(
    m: usize,
    phi_max: f64,
    d_m_target: f64,
    t: f64,
    n0: f64,
    rng: &mut impl Rng,
) -> Result<ChannelConfig> {
    if m == 0 {
        return Err(Error::InvalidInput("draw_channel: no devices".into()));
    }
    if !(0.0..=2.0 * std::f64::consts::PI + 1e-12).contains(&phi_max) {
        return Err(Error::InvalidInput(format!(
            "draw_channel: phi_max must be in [0, 2*pi], got {phi_max}"
        )));
    }
    if !(d_m_target > 0.0 && d_m_target <= 1.0) {
        return Err(Error::InvalidInput(format!(
            "draw_channel: d_M must be in (0, 1], got {d_m_target}"
        )));
    }
    let h: Vec<Complex64> = (0..m)
        .map(|_| {
            let phi = if phi_max > 0.0 { rng.random_range(0.0..phi_max) } else { 0.0 };
            Complex64::new(phi.cos(), phi.sin())
        })
        .collect();

    if d_m_target == 1.0 || m == 1 {
        return ChannelConfig::new_synchronous(h, t, n0);
    }

    let tau_m = (1.0 - d_m_target) * t;
    let gap = DRAW_OFFSET_GAP_FRACTION * t;
    for _ in 0..MAX_OFFSET_DRAW_ATTEMPTS {
        let mut tau = Vec::with_capacity(m);
        tau.push(0.0);
        let mut inner: Vec<f64> = (0..m - 2).map(|_| rng.random_range(0.0..tau_m)).collect();
        inner.sort_by(|a, b| a.partial_cmp(b).unwrap());
        tau.extend(inner);
        tau.push(tau_m);
        let ok = tau.windows(2).all(|w| w[1] - w[0] >= gap) && t - tau_m >= gap;
        if ok {
            return ChannelConfig::new_asynchronous(h, tau, t, n0);
        }
    }
    Err(Error::NumericalFailure(format!(
        "draw_channel: could not draw offsets with spacing {gap} in {MAX_OFFSET_DRAW_ATTEMPTS} attempts"
    )))
}

// ---------------------------------------------------------------------------
// EsN0
// ---------------------------------------------------------------------------

/// Received energy per symbol over noise spectral density, in dB:
/// `10 log10( (1/(N0 L)) sum_i |sum_m e^{j phi_m} s_m[i]|^2 )`.
pub fn compute_esn0(devices: &[DeviceData], phi: &[f64], n0: f64) -> Result<f64> {
    let s = signal_energy_per_symbol(devices, phi)?;
    if !(n0 > 0.0) {
        return Err(Error::InvalidInput(format!(
            "compute_esn0: N0 must be positive, got {n0}"
        )));
    }
    Ok(10.0 * (s / n0).log10())
}

/// The numerator of the EsN0 definition:
/// `(1/L) sum_i |sum_m e^{j phi_m} s_m[i]|^2`.
pub fn signal_energy_per_symbol(devices: &[DeviceData], phi: &[f64]) -> Result<f64> {
    if devices.is_empty() {
        return Err(Error::InvalidInput("signal energy: no devices".into()));
    }
    if devices.len() != phi.len() {
        return Err(Error::DimensionMismatch(format!(
            "signal energy: {} devices but {} phases",
            devices.len(),
            phi.len()
        )));
    }
    let l = devices[0].s.len();
    if devices.iter().any(|d| d.s.len() != l) || l == 0 {
        return Err(Error::DimensionMismatch(
            "signal energy: devices must share a positive packet length".into(),
        ));
    }
    let rot: Vec<Complex64> = phi.iter().map(|p| Complex64::new(p.cos(), p.sin())).collect();
    let mut acc = 0.0;
    for i in 0..l {
        let sum: Complex64 = devices
            .iter()
            .zip(&rot)
            .map(|(dev, r)| r * dev.s[i])
            .sum();
        acc += sum.norm_sqr();
    }
    Ok(acc / l as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{substream, Purpose};

    fn rng(seed: u64) -> rand_chacha::ChaCha12Rng {
        substream(seed, 0, Purpose::Symbols, 0)
    }

    const SECTION_V_RANGES: [(f64, f64); 4] = [(-6.0, 0.0), (-4.0, 2.0), (-2.0, 4.0), (0.0, 6.0)];

    #[test]
    fn generated_symbols_have_expected_mean_and_support() {
        let mut r = rng(1);
        let devices = generate_symbols(&SECTION_V_RANGES, 1024, &mut r).unwrap();
        assert_eq!(devices.len(), 4);
        let mean_re: f64 =
            devices[0].s.iter().map(|x| x.re).sum::<f64>() / devices[0].s.len() as f64;
        assert!((-3.3..=-2.7).contains(&mean_re), "mean {mean_re}");
        for dev in &devices {
            assert_eq!(dev.s.len(), 1024);
            assert_eq!(dev.theta, dev.s);
        }

        let mut r = rng(2);
        let two = generate_symbols(&[(0.0, 1.0)], 2, &mut r).unwrap();
        for x in &two[0].s {
            assert!((0.0..=1.0).contains(&x.re) && (0.0..=1.0).contains(&x.im));
        }
    }

    #[test]
    fn degenerate_interval_is_rejected() {
        let mut r = rng(3);
        assert!(generate_symbols(&[(0.0, 0.0)], 8, &mut r).is_err());
        assert!(generate_symbols(&[(1.0, 0.0)], 8, &mut r).is_err());
        assert!(generate_symbols(&[(0.0, 1.0)], 1, &mut r).is_err());
    }

    #[test]
    fn nomographic_pairs() {
        // Arithmetic mean, M = 4: psi([8]) = [2].
        let out = post_process(&[Complex64::new(8.0, 0.0)], Nomographic::ArithmeticMean, 4)
            .unwrap();
        assert!((out[0].re - 2.0).abs() < 1e-15);

        // Geometric mean: phi(e) = 1, psi([2], M=2) = [e].
        let e = std::f64::consts::E;
        let pre = pre_process(&[Complex64::new(e, 0.0)], Nomographic::GeometricMean).unwrap();
        assert!((pre[0].re - 1.0).abs() < 1e-15);
        let post = post_process(&[Complex64::new(2.0, 0.0)], Nomographic::GeometricMean, 2)
            .unwrap();
        assert!((post[0].re - e).abs() < 1e-12);

        // Round trip: geometric mean of 2 and 8 is 4.
        let theta = [Complex64::new(2.0, 0.0), Complex64::new(8.0, 0.0)];
        let s = pre_process(&theta, Nomographic::GeometricMean).unwrap();
        let sum = [s[0] + s[1]];
        let mean = post_process(&sum, Nomographic::GeometricMean, 2).unwrap();
        assert!((mean[0].re - 4.0).abs() < 1e-12);

        assert!(pre_process(&[Complex64::new(-1.0, 0.0)], Nomographic::GeometricMean).is_err());
    }

    #[test]
    fn sample_moments_basics() {
        let (e, v, d) =
            sample_moments(&[Complex64::new(1.0, 0.0), Complex64::new(-1.0, 0.0)]).unwrap();
        assert_eq!((e, v, d), (Complex64::new(0.0, 0.0), 1.0, 1.0));

        let constant = [Complex64::new(1.0, 1.0); 2];
        assert!(matches!(sample_moments(&constant), Err(Error::DegeneratePrior(_))));
    }

    #[test]
    fn uniform_variance_matches_closed_form() {
        // Real uniform on [-6, 0] has variance 36/12 = 3.
        let mut r = rng(4);
        let devices = generate_symbols_real(&[(-6.0, 0.0)], 1024, &mut r).unwrap();
        let (_, _, d) = sample_moments(&devices[0].s).unwrap();
        assert!((d - 3.0).abs() < 0.3, "sample variance {d}");
    }

    #[test]
    fn build_prior_small_cases() {
        let p = build_prior(&[(Complex64::new(0.0, 0.0), 1.0, 1.0)]).unwrap();
        assert_eq!(p.mu_hat()[0], Complex64::new(0.0, 0.0));
        assert_eq!(p.d_mat()[(0, 0)], 1.0);
        assert_eq!(p.v_mat()[(0, 0)], Complex64::new(1.0, 0.0));

        let p = build_prior(&[
            (Complex64::new(1.0, 0.0), 2.0, 1.0),
            (Complex64::new(0.0, 1.0), 2.0, 1.0),
        ])
        .unwrap();
        // V_12 = conj(E_1) E_2 = conj(1) * j = j.
        assert_eq!(p.v_mat()[(0, 1)], Complex64::new(0.0, 1.0));
        assert_eq!(p.v_mat()[(1, 0)], Complex64::new(0.0, -1.0));
    }

    #[test]
    fn v_minus_outer_product_is_d() {
        let mut r = rng(5);
        let devices = generate_symbols(&SECTION_V_RANGES, 256, &mut r).unwrap();
        let p = prior_from_devices(&devices).unwrap();
        let v = p.v_mat();
        let mu = p.mu_hat();
        let m = p.num_devices();
        for i in 0..m {
            for j in 0..m {
                let e = v[(i, j)] - mu[i].conj() * mu[j];
                if i == j {
                    assert!((e.re - p.d()[i]).abs() < 1e-12 && e.im.abs() < 1e-12);
                } else {
                    assert!(e.norm() < 1e-12);
                }
            }
        }
        // V is Hermitian positive definite: check via its smallest eigenvalue.
        let eig = v.symmetric_eigenvalues();
        assert!(eig.iter().all(|l| *l > 0.0));
    }

    #[test]
    fn async_prior_tiles() {
        let p = build_prior(&[
            (Complex64::new(1.0, 0.0), 2.0, 1.0),
            (Complex64::new(0.0, 1.0), 3.0, 2.0),
        ])
        .unwrap();
        let (mu, d) = build_async_prior(&p, 3);
        assert_eq!(mu.len(), 6);
        assert_eq!(mu[2], mu[0]);
        assert_eq!(mu[3], mu[1]);
        assert_eq!(d.as_slice(), &[1.0, 2.0, 1.0, 2.0, 1.0, 2.0]);
        // Leading M block reproduces D.
        assert_eq!(&d.as_slice()[..2], &[1.0, 2.0]);
    }

    #[test]
    fn draw_channel_modes_and_offsets() {
        let mut r = rng(6);
        let sync = draw_channel(4, 0.0, 1.0, 1.0, 0.1, &mut r).unwrap();
        assert_eq!(sync.mode(), ChannelMode::Synchronous);
        for h in sync.h() {
            assert_eq!(*h, Complex64::new(1.0, 0.0));
        }

        let asynch = draw_channel(4, 0.0, 0.1, 1.0, 0.1, &mut r).unwrap();
        assert_eq!(asynch.mode(), ChannelMode::Asynchronous);
        let tau = asynch.tau();
        assert_eq!(tau[0], 0.0);
        assert!((tau[3] - 0.9).abs() < 1e-12);
        let d = asynch.filter_lengths().unwrap();
        assert!((d.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!((d[3] - 0.1).abs() < 1e-12);

        assert!(draw_channel(4, -1.0, 0.5, 1.0, 0.1, &mut r).is_err());
        assert!(draw_channel(4, 0.0, 0.0, 1.0, 0.1, &mut r).is_err());
    }

    #[test]
    fn drawn_phases_have_uniform_mean() {
        let mut r = rng(7);
        let mut acc = 0.0;
        let mut count = 0;
        for _ in 0..1000 {
            let cfg = draw_channel(4, std::f64::consts::PI, 0.5, 1.0, 0.1, &mut r).unwrap();
            for h in cfg.h() {
                acc += h.arg();
                count += 1;
            }
        }
        let mean = acc / count as f64;
        assert!((mean - std::f64::consts::FRAC_PI_2).abs() < 0.05, "mean phase {mean}");
    }

    #[test]
    fn esn0_closed_forms() {
        let dev = |vals: Vec<Complex64>| DeviceData { theta: vals.clone(), s: vals };
        let ones = vec![Complex64::new(1.0, 0.0); 4];
        let devices: Vec<DeviceData> = (0..4).map(|_| dev(ones.clone())).collect();
        let esn0 = compute_esn0(&devices, &[0.0; 4], 1.0).unwrap();
        assert!((esn0 - 10.0 * 16.0_f64.log10()).abs() < 1e-12);

        let single = vec![dev(vec![Complex64::new(1.0, 0.0); 2])];
        assert!(compute_esn0(&single, &[0.0], 1.0).unwrap().abs() < 1e-12);

        // Scaling all symbols by 2 adds exactly 10 log10(4) dB.
        let doubled: Vec<DeviceData> = devices
            .iter()
            .map(|d| dev(d.s.iter().map(|x| x * 2.0).collect()))
            .collect();
        let esn0_doubled = compute_esn0(&doubled, &[0.0; 4], 1.0).unwrap();
        assert!((esn0_doubled - esn0 - 10.0 * 4.0_f64.log10()).abs() < 1e-12);

        assert!(compute_esn0(&devices, &[0.0; 4], 0.0).is_err());
    }

    #[test]
    fn esn0_invariant_under_global_rotation() {
        let mut r = rng(8);
        let devices = generate_symbols(&SECTION_V_RANGES, 64, &mut r).unwrap();
        let phi = [0.3, 1.1, 2.0, 0.7];
        let base = compute_esn0(&devices, &phi, 0.5).unwrap();
        let rotated: Vec<f64> = phi.iter().map(|p| p + 0.9).collect();
        let rot = compute_esn0(&devices, &rotated, 0.5).unwrap();
        assert!((base - rot).abs() < 1e-10);
    }
}
