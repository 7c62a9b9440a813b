//! Received-sample generation for the aligned, synchronous and asynchronous
//! models, and the linear-model artifacts `G`, `F`, `Sigma_z`.
//!
//! Everything is simulated directly in the sampled domain: for rectangular
//! pulses the matched-filter outputs are exactly the discrete models below,
//! so no waveform synthesis or numerical integration is involved.
//!
//! Asynchronous sampling uses a bank of `M` matched filters spanning the
//! inter-offset intervals `d_k = tau_{k+1} - tau_k`. Filter `k` sampled at
//! index `i` sees
//!
//! ```text
//! y_k[i] = sum_m h_m s_m[i - 1_{m>k}] + z_k[i],   z_k[i] ~ CN(0, N0 T / d_k)
//! ```
//!
//! with the boundary convention `s_m[0] = s_m[L+1] = 0`. The sample at
//! `(k = M, i = L+1)` would see no symbols at all and is not produced, so a
//! packet yields `M (L+1) - 1` samples. Samples are stacked index-major:
//! `y_1[1], ..., y_M[1], y_1[2], ..., y_{M-1}[L+1]`.

use std::io::Write;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::numerics::solve::BlockTridiagHermitian;
use crate::scenario::{ChannelConfig, ChannelMode, DeviceData};

/// One circularly-symmetric complex Gaussian draw with total variance
/// `var` (each real component has variance `var / 2`).
pub(crate) fn sample_cn(var: f64, rng: &mut impl Rng) -> Complex64 {
    let sd = (var / 2.0).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(sd * re, sd * im)
}

// ---------------------------------------------------------------------------
// SampleSet
// ---------------------------------------------------------------------------

/// The oversampled matched-filter-bank output of one asynchronous packet.
///
/// Indexed by filter `k` in `1..=M` and sample index `i` in `1..=L+1`, with
/// `(M, L+1)` absent; `d` holds the filter lengths.
#[derive(Debug, Clone)]
pub struct SampleSet {
    y: Vec<Complex64>,
    d: Vec<f64>,
    m: usize,
    l: usize,
}

impl SampleSet {
    pub fn new(y: Vec<Complex64>, d: Vec<f64>, m: usize, l: usize) -> Result<Self> {
        if y.len() != m * (l + 1) - 1 {
            return Err(Error::DimensionMismatch(format!(
                "SampleSet: expected {} samples for M={m}, L={l}, got {}",
                m * (l + 1) - 1,
                y.len()
            )));
        }
        if d.len() != m {
            return Err(Error::DimensionMismatch(format!(
                "SampleSet: expected {m} filter lengths, got {}",
                d.len()
            )));
        }
        Ok(Self { y, d, m, l })
    }

    pub fn num_devices(&self) -> usize {
        self.m
    }

    pub fn packet_len(&self) -> usize {
        self.l
    }

    /// Filter lengths `d_k`; they sum to the symbol period.
    pub fn filter_lengths(&self) -> &[f64] {
        &self.d
    }

    /// All samples in stacking order.
    pub fn values(&self) -> &[Complex64] {
        &self.y
    }

    pub fn stacked(&self) -> DVector<Complex64> {
        DVector::from_column_slice(&self.y)
    }

    /// Flat position of `y_k[i]` (`k`, `i` 1-based), if that sample exists.
    pub fn index_of(&self, k: usize, i: usize) -> Option<usize> {
        if k == 0 || k > self.m || i == 0 || i > self.l + 1 || (k == self.m && i == self.l + 1) {
            return None;
        }
        Some((i - 1) * self.m + (k - 1))
    }

    pub fn get(&self, k: usize, i: usize) -> Option<Complex64> {
        self.index_of(k, i).map(|idx| self.y[idx])
    }

    /// The `M`-th filter's row `y_M[1..=L]`: a synchronous packet with the
    /// noise variance amplified by `T / d_M`.
    pub fn mth_filter_row(&self) -> Vec<Complex64> {
        (1..=self.l)
            .map(|i| self.y[(i - 1) * self.m + (self.m - 1)])
            .collect()
    }

    /// Debug CSV dump with columns `k,i,re,im` in stacking order.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "k,i,re,im")?;
        for i in 1..=(self.l + 1) {
            for k in 1..=self.m {
                if let Some(idx) = self.index_of(k, i) {
                    let v = self.y[idx];
                    writeln!(w, "{k},{i},{},{}", v.re, v.im)?;
                }
            }
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Linear model y = G s + z
// ---------------------------------------------------------------------------

/// The stacked linear model of one asynchronous packet: sparse rows of the
/// banded `(M(L+1)-1) x ML` matrix `G`, the summing selector `F`
/// (`s_+ = F s`) and the diagonal noise covariance `Sigma_z` with entries
/// `N0 T / d_k`.
#[derive(Debug, Clone)]
pub struct LinearModel {
    m: usize,
    l: usize,
    /// Per row: `(column, coefficient)` pairs in ascending column order.
    rows: Vec<Vec<(usize, Complex64)>>,
    sigma_z: Vec<f64>,
}

impl LinearModel {
    pub fn num_devices(&self) -> usize {
        self.m
    }

    pub fn packet_len(&self) -> usize {
        self.l
    }

    /// Number of samples, `M (L+1) - 1`.
    pub fn num_rows(&self) -> usize {
        self.m * (self.l + 1) - 1
    }

    /// Number of stacked symbols, `M L`.
    pub fn num_cols(&self) -> usize {
        self.m * self.l
    }

    /// Diagonal of `Sigma_z` in stacking order.
    pub fn sigma_z(&self) -> &[f64] {
        &self.sigma_z
    }

    /// `G s` via the sparse rows.
    pub fn apply_g(&self, s: &DVector<Complex64>) -> DVector<Complex64> {
        DVector::from_iterator(
            self.num_rows(),
            self.rows.iter().map(|row| {
                row.iter().map(|&(c, g)| g * s[c]).sum::<Complex64>()
            }),
        )
    }

    /// `G^H y` via the sparse rows.
    pub fn apply_g_adjoint(&self, y: &DVector<Complex64>) -> DVector<Complex64> {
        let mut out = DVector::<Complex64>::zeros(self.num_cols());
        for (r, row) in self.rows.iter().enumerate() {
            for &(c, g) in row {
                out[c] += g.conj() * y[r];
            }
        }
        out
    }

    /// `F s`: per-index sums over the length-`M` blocks.
    pub fn apply_f(&self, s: &DVector<Complex64>) -> Vec<Complex64> {
        (0..self.l)
            .map(|i| (0..self.m).map(|m| s[i * self.m + m]).sum())
            .collect()
    }

    /// Dense `G` (for tests and small problems).
    pub fn g_dense(&self) -> DMatrix<Complex64> {
        let mut g = DMatrix::zeros(self.num_rows(), self.num_cols());
        for (r, row) in self.rows.iter().enumerate() {
            for &(c, coeff) in row {
                g[(r, c)] = coeff;
            }
        }
        g
    }

    /// Dense `F` (`L x ML` 0/1 block selector).
    pub fn f_dense(&self) -> DMatrix<f64> {
        let mut f = DMatrix::zeros(self.l, self.num_cols());
        for i in 0..self.l {
            for m in 0..self.m {
                f[(i, i * self.m + m)] = 1.0;
            }
        }
        f
    }

    /// Dense `G D G^H + Sigma_z` for a diagonal prior `D` (given by its
    /// diagonal). Assembled from the sparse rows: entries vanish outside the
    /// `|row - row'| <= 2M` band.
    pub fn gram_plus_noise(&self, d_diag: &DVector<f64>) -> DMatrix<Complex64> {
        let n = self.num_rows();
        let band = 2 * self.m;
        let mut h = DMatrix::<Complex64>::zeros(n, n);
        for r1 in 0..n {
            let row1 = &self.rows[r1];
            for r2 in r1..(r1 + band + 1).min(n) {
                let row2 = &self.rows[r2];
                // Merge the two sorted sparse rows on the shared columns.
                let mut acc = Complex64::new(0.0, 0.0);
                let (mut a, mut b) = (0, 0);
                while a < row1.len() && b < row2.len() {
                    match row1[a].0.cmp(&row2[b].0) {
                        std::cmp::Ordering::Less => a += 1,
                        std::cmp::Ordering::Greater => b += 1,
                        std::cmp::Ordering::Equal => {
                            let c = row1[a].0;
                            acc += row1[a].1 * d_diag[c] * row2[b].1.conj();
                            a += 1;
                            b += 1;
                        }
                    }
                }
                h[(r1, r2)] = acc;
                if r1 != r2 {
                    h[(r2, r1)] = acc.conj();
                }
            }
            h[(r1, r1)] += Complex64::new(self.sigma_z[r1], 0.0);
        }
        h
    }

    /// The normal matrix `G^H Sigma_z^-1 G` in block-tridiagonal form
    /// (`M x M` blocks over symbol indices) together with nothing else; the
    /// right-hand side `G^H Sigma_z^-1 y` comes from
    /// [`LinearModel::weighted_adjoint`].
    pub fn normal_matrix(&self) -> BlockTridiagHermitian {
        let m = self.m;
        let l = self.l;
        let mut diag = vec![DMatrix::<Complex64>::zeros(m, m); l];
        let mut upper = vec![DMatrix::<Complex64>::zeros(m, m); l.saturating_sub(1)];
        for (r, row) in self.rows.iter().enumerate() {
            let w = 1.0 / self.sigma_z[r];
            for &(c1, g1) in row {
                let (b1, o1) = (c1 / m, c1 % m);
                for &(c2, g2) in row {
                    let (b2, o2) = (c2 / m, c2 % m);
                    let val = g1.conj() * g2 * w;
                    if b1 == b2 {
                        diag[b1][(o1, o2)] += val;
                    } else if b2 == b1 + 1 {
                        upper[b1][(o1, o2)] += val;
                    }
                    // b2 == b1 - 1 is implied by Hermitian symmetry.
                }
            }
        }
        BlockTridiagHermitian { diag, upper }
    }

    /// `G^H Sigma_z^-1 y`.
    pub fn weighted_adjoint(&self, y: &DVector<Complex64>) -> DVector<Complex64> {
        let mut out = DVector::<Complex64>::zeros(self.num_cols());
        for (r, row) in self.rows.iter().enumerate() {
            let w = y[r] / self.sigma_z[r];
            for &(c, g) in row {
                out[c] += g.conj() * w;
            }
        }
        out
    }
}

/// Build the linear-model artifacts for an asynchronous configuration.
pub fn build_linear_model(cfg: &ChannelConfig, l: usize) -> Result<LinearModel> {
    if cfg.mode() != ChannelMode::Asynchronous {
        return Err(Error::InvalidInput(
            "build_linear_model: configuration is not asynchronous".into(),
        ));
    }
    if l == 0 {
        return Err(Error::InvalidInput("build_linear_model: empty packet".into()));
    }
    let m = cfg.num_devices();
    let h = cfg.h();
    let d = cfg.filter_lengths()?;
    let mut rows = Vec::with_capacity(m * (l + 1) - 1);
    let mut sigma_z = Vec::with_capacity(m * (l + 1) - 1);
    for i in 1..=(l + 1) {
        for k in 1..=m {
            if k == m && i == l + 1 {
                continue;
            }
            let mut row = Vec::with_capacity(m);
            // Devices m <= k contribute s_m[i], devices m > k contribute
            // s_m[i-1]; indices outside 1..=L are the structural zeros.
            if i >= 2 {
                for dev in (k + 1)..=m {
                    row.push(((i - 2) * m + (dev - 1), h[dev - 1]));
                }
            }
            if i <= l {
                for dev in 1..=k {
                    row.push(((i - 1) * m + (dev - 1), h[dev - 1]));
                }
            }
            rows.push(row);
            sigma_z.push(cfg.n0() * cfg.t() / d[k - 1]);
        }
    }
    Ok(LinearModel { m, l, rows, sigma_z })
}

// ---------------------------------------------------------------------------
// Samplers
// ---------------------------------------------------------------------------

/// Aligned OAC: `r[i] = s_+[i] + z[i]`, `z[i] ~ CN(0, N0/T)` i.i.d.
pub fn sample_aligned(
    s_plus: &[Complex64],
    n0: f64,
    t: f64,
    rng: &mut impl Rng,
) -> Vec<Complex64> {
    let var = n0 / t;
    s_plus
        .iter()
        .map(|s| if n0 > 0.0 { s + sample_cn(var, rng) } else { *s })
        .collect()
}

/// Synchronous OAC: `r[i] = sum_m h_m s_m[i] + z[i]`, `z[i] ~ CN(0, N0/T)`.
pub fn sample_synchronous(
    devices: &[DeviceData],
    cfg: &ChannelConfig,
    rng: &mut impl Rng,
) -> Result<Vec<Complex64>> {
    if cfg.mode() != ChannelMode::Synchronous {
        return Err(Error::InvalidInput(
            "sample_synchronous: configuration is not synchronous".into(),
        ));
    }
    check_devices(devices, cfg)?;
    let l = devices[0].s.len();
    let var = cfg.n0() / cfg.t();
    Ok((0..l)
        .map(|i| {
            let sum: Complex64 = devices
                .iter()
                .zip(cfg.h())
                .map(|(dev, h)| h * dev.s[i])
                .sum();
            if cfg.n0() > 0.0 {
                sum + sample_cn(var, rng)
            } else {
                sum
            }
        })
        .collect())
}

/// Asynchronous OAC through the whitened matched-filter bank.
pub fn sample_asynchronous(
    devices: &[DeviceData],
    cfg: &ChannelConfig,
    rng: &mut impl Rng,
) -> Result<SampleSet> {
    if cfg.mode() != ChannelMode::Asynchronous {
        return Err(Error::InvalidInput(
            "sample_asynchronous: configuration is not asynchronous".into(),
        ));
    }
    check_devices(devices, cfg)?;
    let m = cfg.num_devices();
    let l = devices[0].s.len();
    let d = cfg.filter_lengths()?;
    let h = cfg.h();
    let mut y = Vec::with_capacity(m * (l + 1) - 1);
    for i in 1..=(l + 1) {
        for k in 1..=m {
            if k == m && i == l + 1 {
                continue;
            }
            let mut acc = Complex64::new(0.0, 0.0);
            for (dev_idx, dev) in devices.iter().enumerate() {
                let sym_idx = if dev_idx + 1 > k { i as isize - 1 } else { i as isize };
                if sym_idx >= 1 && sym_idx <= l as isize {
                    acc += h[dev_idx] * dev.s[sym_idx as usize - 1];
                }
            }
            if cfg.n0() > 0.0 {
                acc += sample_cn(cfg.n0() * cfg.t() / d[k - 1], rng);
            }
            y.push(acc);
        }
    }
    SampleSet::new(y, d, m, l)
}

fn check_devices(devices: &[DeviceData], cfg: &ChannelConfig) -> Result<()> {
    if devices.len() != cfg.num_devices() {
        return Err(Error::DimensionMismatch(format!(
            "{} devices but {} channel gains",
            devices.len(),
            cfg.num_devices()
        )));
    }
    let l = devices.first().map(|d| d.s.len()).unwrap_or(0);
    if l == 0 || devices.iter().any(|d| d.s.len() != l) {
        return Err(Error::DimensionMismatch(
            "devices must share a positive packet length".into(),
        ));
    }
    Ok(())
}
