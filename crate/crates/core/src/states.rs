//! Quantum states on 1-D grids: harmonic-oscillator eigenstates, Gaussian
//! wavepackets, the momentum-space amplitude, and the amplitude/phase
//! (Madelung) decomposition.
//!
//! All state types are immutable after construction and validated against
//! their invariants (unit norm, boundary decay) when built.

use crate::error::{Error, Result};
use crate::fft::{wavenumbers, FftPair};
use crate::grid::Grid1D;
use crate::interp;
use crate::parallel::map_indexed;
use crate::potential::Potential;
use crate::specfun::hermite_scaled;
use num_complex::Complex64;
use std::f64::consts::PI;

/// Default number of grid points. Odd, so symmetric grids sample x = 0.
pub const DEFAULT_GRID_POINTS: usize = 1025;
/// Required amplitude falloff at the grid endpoints, relative to the peak.
pub const BOUNDARY_DECAY: f64 = 1e-10;
/// Allowed deviation of Σ|ψ|²·h from unity.
pub const NORM_TOLERANCE: f64 = 1e-8;
/// Multiple of the classical turning point the grid must cover.
const TURNING_POINT_MARGIN: f64 = 5.0;

/// Physical parameters of the oscillator problem. The inverse length scale
/// α = √(mω/ħ) is always derived, never stored.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OscillatorParams {
    mass: f64,
    omega: f64,
    hbar: f64,
}

impl OscillatorParams {
    pub fn new(mass: f64, omega: f64, hbar: f64) -> Result<Self> {
        if !(mass > 0.0 && omega > 0.0 && hbar > 0.0) {
            return Err(Error::Parameter(format!(
                "oscillator parameters must be positive: m={mass}, omega={omega}, hbar={hbar}"
            )));
        }
        Ok(Self { mass, omega, hbar })
    }

    /// Natural units ħ = m = ω = 1.
    pub fn natural() -> Self {
        Self { mass: 1.0, omega: 1.0, hbar: 1.0 }
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    pub fn hbar(&self) -> f64 {
        self.hbar
    }

    /// α = √(mω/ħ).
    pub fn alpha(&self) -> f64 {
        (self.mass * self.omega / self.hbar).sqrt()
    }

    /// E_n = ħω(n + ½).
    pub fn level_energy(&self, n: u32) -> f64 {
        self.hbar * self.omega * (n as f64 + 0.5)
    }
}

/// Half-width floor keeping the ground-state amplitude tail below
/// `BOUNDARY_DECAY` (e^{−6.9²/2} ≈ 4.6e−11).
const MIN_HALF_WIDTH: f64 = 6.9;

fn default_half_width(n_max: u32) -> f64 {
    (TURNING_POINT_MARGIN * ((2 * n_max + 1) as f64).sqrt()).max(MIN_HALF_WIDTH)
}

/// Position grid covering ±max(5·√(2n_max+1), 6.9)/α.
pub fn default_position_grid(n_max: u32, params: &OscillatorParams) -> Grid1D {
    let half = default_half_width(n_max) / params.alpha();
    Grid1D::symmetric(half, DEFAULT_GRID_POINTS).expect("positive half width")
}

/// Momentum grid mirroring the position rule: ±max(5·√(2n_max+1), 6.9)·ħα.
pub fn default_momentum_grid(n_max: u32, params: &OscillatorParams) -> Grid1D {
    let half = default_half_width(n_max) * params.hbar() * params.alpha();
    Grid1D::symmetric(half, DEFAULT_GRID_POINTS).expect("positive half width")
}

/// Complex position-space amplitude sampled on a uniform grid.
#[derive(Debug, Clone)]
pub struct WaveFunction {
    grid: Grid1D,
    values: Vec<Complex64>,
    params: OscillatorParams,
    time: f64,
    label: Option<String>,
}

impl WaveFunction {
    /// Build and validate: Σ|ψ|²·h = 1 within `NORM_TOLERANCE` and endpoint
    /// amplitudes below `BOUNDARY_DECAY` of the peak.
    pub fn new(
        grid: Grid1D,
        values: Vec<Complex64>,
        params: OscillatorParams,
        time: f64,
        label: Option<String>,
    ) -> Result<Self> {
        if values.len() != grid.count() {
            return Err(Error::Parameter(format!(
                "value count {} does not match grid count {}",
                values.len(),
                grid.count()
            )));
        }
        let wf = Self { grid, values, params, time, label };
        wf.validate()?;
        Ok(wf)
    }

    fn validate(&self) -> Result<()> {
        let norm = self.norm();
        if (norm - 1.0).abs() > NORM_TOLERANCE {
            return Err(Error::Domain(format!(
                "state norm {norm:.12} deviates from 1 beyond {NORM_TOLERANCE:e}; \
                 grid too small or too coarse"
            )));
        }
        let peak = self.values.iter().map(|v| v.norm()).fold(0.0, f64::max);
        let edge = self.values[0].norm().max(self.values[self.grid.count() - 1].norm());
        if edge > BOUNDARY_DECAY * peak {
            return Err(Error::Domain(format!(
                "boundary amplitude ratio {:.2e} exceeds {BOUNDARY_DECAY:e}; \
                 enlarge the grid extent [{:.4}, {:.4}]",
                edge / peak,
                self.grid.min(),
                self.grid.max()
            )));
        }
        Ok(())
    }

    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn params(&self) -> &OscillatorParams {
        &self.params
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn label(&self) -> Option<&str> {
        self.label.as_deref()
    }

    /// Σ|ψ|²·h.
    pub fn norm(&self) -> f64 {
        let h = self.grid.spacing();
        self.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * h
    }

    /// |ψ(x_i)|² for every grid point.
    pub fn abs2(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.norm_sqr()).collect()
    }

    /// Cubic interpolation off-grid; zero outside the grid.
    pub fn value_at(&self, x: f64) -> Complex64 {
        interp::eval_complex(&self.grid, &self.values, x)
    }

    /// ⟨x^k⟩ by Riemann sum.
    pub fn mean_x_power(&self, k: u32) -> f64 {
        let h = self.grid.spacing();
        self.values
            .iter()
            .enumerate()
            .map(|(i, v)| self.grid.point(i).powi(k as i32) * v.norm_sqr())
            .sum::<f64>()
            * h
    }

    /// ⟨V(x)⟩ by Riemann sum.
    pub fn mean_potential(&self, potential: &Potential) -> f64 {
        let h = self.grid.spacing();
        self.values
            .iter()
            .enumerate()
            .map(|(i, v)| potential.value(self.grid.point(i)) * v.norm_sqr())
            .sum::<f64>()
            * h
    }

    /// ⟨V′(x)⟩ by Riemann sum.
    pub fn mean_potential_gradient(&self, potential: &Potential) -> f64 {
        let h = self.grid.spacing();
        self.values
            .iter()
            .enumerate()
            .map(|(i, v)| potential.derivative(self.grid.point(i)) * v.norm_sqr())
            .sum::<f64>()
            * h
    }

    /// FFT spectrum of the sampled amplitudes (unnormalized bins).
    pub(crate) fn spectrum(&self) -> Vec<Complex64> {
        let mut buf = self.values.clone();
        FftPair::new(buf.len()).forward(&mut buf);
        buf
    }

    /// ⟨p^k⟩ for k = 1, 2 via the FFT spectrum (spectrally accurate).
    pub(crate) fn mean_p_power_spectral(&self, k: u32) -> f64 {
        let spec = self.spectrum();
        let ks = wavenumbers(spec.len(), self.grid.spacing());
        let hbar = self.params.hbar;
        let mut num = 0.0;
        let mut den = 0.0;
        for (amp, &kw) in spec.iter().zip(&ks) {
            let w = amp.norm_sqr();
            num += (hbar * kw).powi(k as i32) * w;
            den += w;
        }
        num / den
    }

    /// Spectral n-th derivative sampled on the grid. Bins at rounding level
    /// are zeroed first; k^order would otherwise amplify pure roundoff far
    /// beyond the resolved content.
    pub(crate) fn derivative_spectral(&self, order: u32) -> Vec<Complex64> {
        let mut buf = self.values.clone();
        let pair = FftPair::new(buf.len());
        pair.forward(&mut buf);
        let gate = 1e-13 * buf.iter().map(|v| v.norm()).fold(0.0, f64::max);
        let ks = wavenumbers(buf.len(), self.grid.spacing());
        for (v, &kw) in buf.iter_mut().zip(&ks) {
            if v.norm() < gate {
                *v = Complex64::new(0.0, 0.0);
            } else {
                *v *= (Complex64::i() * kw).powu(order);
            }
        }
        pair.inverse(&mut buf);
        buf
    }

    /// Relative fraction of spectral weight in the top 5% of |k|; used by the
    /// propagator's aliasing guard.
    pub(crate) fn spectral_tail_fraction(&self) -> f64 {
        let spec = self.spectrum();
        let ks = wavenumbers(spec.len(), self.grid.spacing());
        let kmax = ks.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
        let peak = spec.iter().map(|v| v.norm()).fold(0.0, f64::max);
        let tail = spec
            .iter()
            .zip(&ks)
            .filter(|(_, &kw)| kw.abs() >= 0.95 * kmax)
            .map(|(v, _)| v.norm())
            .fold(0.0, f64::max);
        tail / peak
    }
}

/// Complex momentum-space amplitude.
#[derive(Debug, Clone)]
pub struct MomentumWaveFunction {
    grid: Grid1D,
    values: Vec<Complex64>,
    params: OscillatorParams,
    time: f64,
}

impl MomentumWaveFunction {
    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn params(&self) -> &OscillatorParams {
        &self.params
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn norm(&self) -> f64 {
        let dp = self.grid.spacing();
        self.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * dp
    }

    pub fn abs2(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.norm_sqr()).collect()
    }

    /// ⟨p^k⟩ by Riemann sum.
    pub fn mean_p_power(&self, k: u32) -> f64 {
        let dp = self.grid.spacing();
        self.values
            .iter()
            .enumerate()
            .map(|(i, v)| self.grid.point(i).powi(k as i32) * v.norm_sqr())
            .sum::<f64>()
            * dp
    }
}

/// Amplitude/phase split ψ = R·e^{iS/ħ}. S carries action units and is
/// defined only where R exceeds 1e−12 of its peak (phase is meaningless at
/// nodes); `defined` marks those points.
#[derive(Debug, Clone)]
pub struct MadelungFields {
    grid: Grid1D,
    r: Vec<f64>,
    s: Vec<f64>,
    defined: Vec<bool>,
}

impl MadelungFields {
    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    pub fn amplitude(&self) -> &[f64] {
        &self.r
    }

    pub fn action(&self) -> &[f64] {
        &self.s
    }

    pub fn defined(&self) -> &[bool] {
        &self.defined
    }
}

/// Harmonic-oscillator eigenstate
/// ψ_n(x;t) = (α²/π)^{1/4}(2ⁿn!)^{−1/2} e^{−α²x²/2} H_n(αx) e^{−iE_n t/ħ}.
///
/// The grid must cover ±5·√(2n+1)/α or the boundary-decay invariant cannot
/// hold.
pub fn ho_eigenstate(
    n: u32,
    params: &OscillatorParams,
    grid: &Grid1D,
    t: f64,
) -> Result<WaveFunction> {
    let alpha = params.alpha();
    let required = TURNING_POINT_MARGIN * ((2 * n + 1) as f64).sqrt() / alpha;
    if grid.min() > -required || grid.max() < required {
        return Err(Error::Domain(format!(
            "grid [{:.4}, {:.4}] too small for eigenstate n={n}: must cover ±{required:.4}",
            grid.min(),
            grid.max()
        )));
    }
    let phase = (-Complex64::i() * params.level_energy(n) * t / params.hbar()).exp();
    let scale = alpha.sqrt();
    let values: Vec<Complex64> = grid
        .points()
        .iter()
        .map(|&x| phase * scale * hermite_scaled(n, alpha * x))
        .collect();
    WaveFunction::new(*grid, values, *params, t, Some(format!("HO n={n}")))
}

/// Normalized Gaussian wavepacket centred at (x0, p0) with position spread σ:
/// N·e^{−(x−x0)²/(4σ²)}·e^{ip0x/ħ}, N = (2πσ²)^{−1/4}, at t = 0.
pub fn gaussian_packet(
    x0: f64,
    p0: f64,
    sigma: f64,
    params: &OscillatorParams,
    grid: &Grid1D,
) -> Result<WaveFunction> {
    if !(sigma > 0.0) {
        return Err(Error::Parameter(format!("sigma must be positive, got {sigma}")));
    }
    if grid.min() > x0 - 8.0 * sigma || grid.max() < x0 + 8.0 * sigma {
        return Err(Error::Domain(format!(
            "grid [{:.4}, {:.4}] too small for packet at x0={x0}, sigma={sigma}: \
             must cover [{:.4}, {:.4}]",
            grid.min(),
            grid.max(),
            x0 - 8.0 * sigma,
            x0 + 8.0 * sigma
        )));
    }
    let hbar = params.hbar();
    let k_content = p0.abs() / hbar + 3.0 / sigma;
    if grid.spacing() > PI / k_content {
        return Err(Error::Domain(format!(
            "grid spacing {:.4e} too coarse for momentum content |p0|={:.4}, sigma={sigma}",
            grid.spacing(),
            p0.abs()
        )));
    }
    let norm = (2.0 * PI * sigma * sigma).powf(-0.25);
    let values: Vec<Complex64> = grid
        .points()
        .iter()
        .map(|&x| {
            let envelope = norm * (-(x - x0) * (x - x0) / (4.0 * sigma * sigma)).exp();
            envelope * (Complex64::i() * p0 * x / hbar).exp()
        })
        .collect();
    WaveFunction::new(*grid, values, *params, 0.0, Some("gaussian packet".into()))
}

/// Normalized superposition Σ c_k ψ_k of eigenstates at t = 0.
pub fn superposition(
    terms: &[(u32, Complex64)],
    params: &OscillatorParams,
    grid: &Grid1D,
) -> Result<WaveFunction> {
    if terms.is_empty() {
        return Err(Error::Parameter("superposition needs at least one term".into()));
    }
    let total: f64 = terms.iter().map(|(_, c)| c.norm_sqr()).sum();
    if total <= 0.0 {
        return Err(Error::Parameter("superposition coefficients are all zero".into()));
    }
    let scale = total.sqrt();
    let mut values = vec![Complex64::new(0.0, 0.0); grid.count()];
    for &(n, c) in terms {
        let state = ho_eigenstate(n, params, grid, 0.0)?;
        for (acc, v) in values.iter_mut().zip(state.values()) {
            *acc += c / scale * v;
        }
    }
    WaveFunction::new(*grid, values, *params, 0.0, Some("superposition".into()))
}

/// Momentum amplitude φ(p;t) = (2πħ)^{−1/2} ∫ e^{−ipx/ħ} ψ(x;t) dx evaluated
/// by direct quadrature on the state's grid, one output row per momentum
/// point (parallel).
pub fn momentum_transform(
    psi: &WaveFunction,
    pgrid: &Grid1D,
) -> Result<MomentumWaveFunction> {
    let values = fourier_rows(psi.grid(), psi.values(), pgrid, psi.params().hbar(), -1.0);
    let out = MomentumWaveFunction {
        grid: *pgrid,
        values,
        params: *psi.params(),
        time: psi.time(),
    };
    let norm = out.norm();
    if (norm - 1.0).abs() > NORM_TOLERANCE {
        return Err(Error::Domain(format!(
            "momentum grid [{:.4}, {:.4}] misses support: transform norm {norm:.10}",
            pgrid.min(),
            pgrid.max()
        )));
    }
    Ok(out)
}

/// Inverse of [`momentum_transform`]:
/// ψ(x;t) = (2πħ)^{−1/2} ∫ e^{+ipx/ħ} φ(p;t) dp.
pub fn position_transform(phi: &MomentumWaveFunction, xgrid: &Grid1D) -> Result<WaveFunction> {
    let values = fourier_rows(phi.grid(), phi.values(), xgrid, phi.params().hbar(), 1.0);
    WaveFunction::new(*xgrid, values, *phi.params(), phi.time(), None)
}

/// Shared kernel: out(y_l) = (2πħ)^{−1/2} Σ_j e^{i·sign·y_l·x_j/ħ} v_j · h.
fn fourier_rows(
    in_grid: &Grid1D,
    in_values: &[Complex64],
    out_grid: &Grid1D,
    hbar: f64,
    sign: f64,
) -> Vec<Complex64> {
    let h = in_grid.spacing();
    let points = in_grid.points();
    let prefactor = h / (2.0 * PI * hbar).sqrt();
    map_indexed(out_grid.count(), |l| {
        let y = out_grid.point(l);
        let step = (Complex64::i() * sign * y * h / hbar).exp();
        let mut acc = Complex64::new(0.0, 0.0);
        let mut phase = Complex64::new(0.0, 0.0);
        for (j, v) in in_values.iter().enumerate() {
            // refresh the phase recurrence periodically to kill drift
            if j % 128 == 0 {
                phase = (Complex64::i() * sign * y * points[j] / hbar).exp();
            }
            acc += v * phase;
            phase *= step;
        }
        acc * prefactor
    })
}

/// ψ = R·e^{iS/ħ} with R = |ψ| and S unwrapped outward from the global
/// maximum of R. S is set (and `defined` true) only where R > 1e−12·max R.
pub fn madelung_decompose(psi: &WaveFunction) -> MadelungFields {
    let n = psi.grid().count();
    let hbar = psi.params().hbar();
    let r: Vec<f64> = psi.values().iter().map(|v| v.norm()).collect();
    let peak = r.iter().cloned().fold(0.0, f64::max);
    let threshold = 1e-12 * peak;
    let defined: Vec<bool> = r.iter().map(|&v| v > threshold).collect();
    let args: Vec<f64> = psi.values().iter().map(|v| v.arg()).collect();
    let i0 = r
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
        .map(|(i, _)| i)
        .unwrap_or(0);

    let wrap = |d: f64| d - 2.0 * PI * (d / (2.0 * PI)).round();
    let mut s = vec![0.0; n];
    s[i0] = args[i0];
    let mut acc = args[i0];
    let mut last = args[i0];
    for i in i0 + 1..n {
        if defined[i] {
            acc += wrap(args[i] - last);
            last = args[i];
            s[i] = acc;
        }
    }
    acc = args[i0];
    last = args[i0];
    for i in (0..i0).rev() {
        if defined[i] {
            acc += wrap(args[i] - last);
            last = args[i];
            s[i] = acc;
        }
    }
    for v in s.iter_mut() {
        *v *= hbar;
    }
    MadelungFields { grid: *psi.grid(), r, s, defined }
}

/// ‖(−ħ²/2m)ψ″ + Vψ − Eψ‖₂ / ‖ψ‖₂ with a central-difference Laplacian on
/// interior points.
pub fn hamiltonian_residual(psi: &WaveFunction, potential: &Potential, energy: f64) -> f64 {
    let grid = psi.grid();
    let v = psi.values();
    let h = grid.spacing();
    let kinetic = -psi.params().hbar().powi(2) / (2.0 * psi.params().mass());
    let mut num = 0.0;
    for i in 1..grid.count() - 1 {
        let lap = (v[i + 1] - 2.0 * v[i] + v[i - 1]) / (h * h);
        let r = kinetic * lap + (potential.value(grid.point(i)) - energy) * v[i];
        num += r.norm_sqr();
    }
    (num * h).sqrt() / psi.norm().sqrt()
}

/// ‖Hψ − ⟨H⟩ψ‖/‖ψ‖ with a spectral Laplacian; ~0 only for stationary
/// states. Used as the stationarity guard by the residual diagnostics.
pub(crate) fn stationarity_defect(psi: &WaveFunction, potential: &Potential) -> f64 {
    let second = psi.derivative_spectral(2);
    let kinetic = -psi.params().hbar().powi(2) / (2.0 * psi.params().mass());
    let grid = psi.grid();
    let h = grid.spacing();
    let hpsi: Vec<Complex64> = psi
        .values()
        .iter()
        .zip(&second)
        .enumerate()
        .map(|(i, (v, d2))| kinetic * d2 + potential.value(grid.point(i)) * v)
        .collect();
    let energy: f64 = psi
        .values()
        .iter()
        .zip(&hpsi)
        .map(|(v, hv)| (v.conj() * hv).re)
        .sum::<f64>()
        * h;
    let mut num = 0.0;
    for (v, hv) in psi.values().iter().zip(&hpsi) {
        num += (hv - energy * v).norm_sqr();
    }
    ((num * h).sqrt() / psi.norm().sqrt()) / energy.abs().max(1.0)
}
