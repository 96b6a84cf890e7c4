//! Phase-space densities under the two rival constructions, their
//! characteristic functions, and the generalized kernel family.
//!
//! * Rule A (`density_factorized`): F(x,p) = |ψ(x)|²·|φ(p)|², positive by
//!   construction.
//! * Rule B (`density_wigner`): Fourier transform of the point-split
//!   characteristic function Z(x,δx) = ψ*(x−δx/2)ψ(x+δx/2) over δx, with the
//!   prefactor (2πħ)^{−1} fixed by unit normalization. `density_wigner_closed`
//!   is the harmonic-oscillator closed form
//!   F_n(x,p) = (πħ)^{−1}(−1)ⁿ e^{−2H/ħω} L_n(4H/ħω).
//! * The kernel family (`cohen_distribution`): F(x,p;f) built from a kernel
//!   f(θ,τ) and the state's ambiguity function; f ≡ 1 recovers rule B, the
//!   ratio kernel of `cohen_kernel_factorized` recovers rule A where its
//!   denominator is nonzero.

use crate::error::{Error, Result};
use crate::grid::Grid1D;
use crate::interp;
use crate::parallel::map_indexed;
use crate::potential::Potential;
use crate::specfun::{hermite_scaled, laguerre};
use crate::states::{
    momentum_transform, stationarity_defect, MomentumWaveFunction, OscillatorParams, WaveFunction,
};
use ndarray::Array2;
use num_complex::Complex64;
use std::f64::consts::PI;

/// Construction rule tag carried by every density.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DensityRule {
    /// Factorized positive construction |ψ|²|φ|².
    FactorizedA,
    /// Point-split (Wigner) construction.
    WignerB,
    /// Kernel-family construction with the given kernel id.
    Cohen(String),
}

impl std::fmt::Display for DensityRule {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            DensityRule::FactorizedA => write!(f, "A"),
            DensityRule::WignerB => write!(f, "B"),
            DensityRule::Cohen(id) => write!(f, "cohen:{id}"),
        }
    }
}

/// Real-valued density sampled on an (x, p) grid, tagged with its
/// construction rule. Normalization ΣΣ·dx·dp = 1 within 1e−6 is enforced at
/// construction; rule A additionally guarantees positivity and both
/// marginals, rule B the marginals only.
#[derive(Debug, Clone)]
pub struct PhaseSpaceDensity {
    xgrid: Grid1D,
    pgrid: Grid1D,
    values: Array2<f64>,
    rule: DensityRule,
    params: OscillatorParams,
    time: f64,
}

/// Absolute normalization tolerance for densities.
pub const DENSITY_NORM_TOL: f64 = 1e-6;
/// Pointwise marginal tolerance, relative to the marginal peak.
pub const MARGINAL_TOL: f64 = 1e-6;

impl PhaseSpaceDensity {
    pub fn xgrid(&self) -> &Grid1D {
        &self.xgrid
    }

    pub fn pgrid(&self) -> &Grid1D {
        &self.pgrid
    }

    /// values[[i, j]] = F(x_i, p_j)
    pub fn values(&self) -> &Array2<f64> {
        &self.values
    }

    pub fn rule(&self) -> &DensityRule {
        &self.rule
    }

    pub fn params(&self) -> &OscillatorParams {
        &self.params
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    /// ΣΣ F dx dp.
    pub fn normalization(&self) -> f64 {
        self.values.sum() * self.xgrid.spacing() * self.pgrid.spacing()
    }

    /// Σ_p F dp per x point.
    pub fn x_marginal(&self) -> Vec<f64> {
        let dp = self.pgrid.spacing();
        self.values
            .rows()
            .into_iter()
            .map(|row| row.sum() * dp)
            .collect()
    }

    /// Σ_x F dx per p point.
    pub fn p_marginal(&self) -> Vec<f64> {
        let dx = self.xgrid.spacing();
        self.values
            .columns()
            .into_iter()
            .map(|col| col.sum() * dx)
            .collect()
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }

    fn validate_normalization(&self) -> Result<()> {
        let norm = self.normalization();
        if (norm - 1.0).abs() > DENSITY_NORM_TOL {
            return Err(Error::Accuracy(format!(
                "density (rule {}) normalization {norm:.10} deviates from 1 beyond {DENSITY_NORM_TOL:e}; \
                 grids too small or too coarse",
                self.rule
            )));
        }
        Ok(())
    }

    fn validate_positivity(&self) -> Result<()> {
        let min = self.min_value();
        let max = self.max_value();
        if min < -1e-15 * max {
            return Err(Error::Accuracy(format!(
                "rule {} density must be positive: min {min:.3e} vs max {max:.3e}",
                self.rule
            )));
        }
        Ok(())
    }

    fn validate_x_marginal(&self, target: &[f64]) -> Result<()> {
        let marginal = self.x_marginal();
        let peak = target.iter().cloned().fold(0.0, f64::max);
        for (i, (&got, &want)) in marginal.iter().zip(target).enumerate() {
            if (got - want).abs() > MARGINAL_TOL * peak.max(1.0) {
                return Err(Error::Accuracy(format!(
                    "x-marginal of rule {} density deviates at x={:.4}: {got:.3e} vs {want:.3e}",
                    self.rule,
                    self.xgrid.point(i)
                )));
            }
        }
        Ok(())
    }
}

/// F^A(x,p) = |ψ(x)|²·|φ(p)|² on the outer product of the two state grids.
///
/// The pair must be Fourier-consistent: φ is recomputed from ψ and compared
/// within 1e−7 before the product is formed.
pub fn density_factorized(
    psi: &WaveFunction,
    phi: &MomentumWaveFunction,
) -> Result<PhaseSpaceDensity> {
    let recomputed = momentum_transform(psi, phi.grid())?;
    let worst = phi
        .values()
        .iter()
        .zip(recomputed.values())
        .map(|(a, b)| (a - b).norm())
        .fold(0.0, f64::max);
    if worst > 1e-7 {
        return Err(Error::Contract(format!(
            "phi is not the momentum transform of psi: max deviation {worst:.3e} > 1e-7"
        )));
    }
    let px = psi.abs2();
    let pp = phi.abs2();
    let nx = px.len();
    let np = pp.len();
    let mut values = Array2::zeros((nx, np));
    for i in 0..nx {
        for j in 0..np {
            values[[i, j]] = px[i] * pp[j];
        }
    }
    let density = PhaseSpaceDensity {
        xgrid: *psi.grid(),
        pgrid: *phi.grid(),
        values,
        rule: DensityRule::FactorizedA,
        params: *psi.params(),
        time: psi.time(),
    };
    density.validate_normalization()?;
    density.validate_positivity()?;
    Ok(density)
}

/// Displacement lattice matching the state's grid: spacing 2h over ±span
/// (twice the grid half-width), so every half-shift δx/2 lands on a grid
/// node when the state grid has an odd point count.
pub fn wigner_displacement_grid(grid: &Grid1D) -> Grid1D {
    let span = grid.span();
    Grid1D::new(-span, span, grid.count()).expect("valid displacement lattice")
}

/// F^B(x,p) = (2πħ)^{−1} ∫ e^{−ipδx/ħ} ψ*(x−δx/2)ψ(x+δx/2) d(δx), evaluated
/// on the state's own x grid with on-grid half-shifts (δx = 2kh), one row per
/// x point (parallel).
pub fn density_wigner(psi: &WaveFunction, pgrid: &Grid1D) -> Result<PhaseSpaceDensity> {
    let grid = psi.grid();
    let v = psi.values();
    let n = grid.count();
    let h = grid.spacing();
    let hbar = psi.params().hbar();
    let np = pgrid.count();
    let pref = 2.0 * h / (2.0 * PI * hbar);

    struct Row {
        values: Vec<f64>,
        gmax: f64,
        gtail: f64,
    }

    let rows: Vec<Row> = map_indexed(n, |i| {
        let kmax = i.min(n - 1 - i);
        // g_k = ψ*(x−kh)·ψ(x+kh); hermitian pairs folded into the real sum
        let g: Vec<Complex64> = (0..=kmax).map(|k| v[i - k].conj() * v[i + k]).collect();
        let gmax = g.iter().map(|z| z.norm()).fold(0.0, f64::max);
        let gtail = g.last().map(|z| z.norm()).unwrap_or(0.0);
        let mut values = vec![0.0; np];
        for (j, slot) in values.iter_mut().enumerate() {
            let p = pgrid.point(j);
            let step = (-Complex64::i() * p * 2.0 * h / hbar).exp();
            let mut phase = step;
            let mut acc = 0.5 * g[0].re;
            for (k, gk) in g.iter().enumerate().skip(1) {
                if k % 128 == 0 {
                    phase = (-Complex64::i() * p * 2.0 * h * k as f64 / hbar).exp();
                }
                acc += (phase * gk).re;
                phase *= step;
            }
            *slot = 2.0 * pref * acc;
        }
        Row { values, gmax, gtail }
    });

    let gmax = rows.iter().map(|r| r.gmax).fold(0.0, f64::max);
    let gtail = rows.iter().map(|r| r.gtail).fold(0.0, f64::max);
    if gtail > 1e-8 * gmax {
        return Err(Error::Domain(format!(
            "displacement window too small: point-split tail {:.3e} of peak exceeds 1e-8",
            gtail / gmax
        )));
    }

    let flat: Vec<f64> = rows.into_iter().flat_map(|r| r.values).collect();
    let density = PhaseSpaceDensity {
        xgrid: *grid,
        pgrid: *pgrid,
        values: Array2::from_shape_vec((n, np), flat).expect("row-major layout"),
        rule: DensityRule::WignerB,
        params: *psi.params(),
        time: psi.time(),
    };
    density.validate_normalization()?;
    density.validate_x_marginal(&psi.abs2())?;
    Ok(density)
}

/// Closed-form rule-B density of eigenstate n:
/// F_n(x,p) = (πħ)^{−1} (−1)ⁿ e^{−2H/ħω} L_n(4H/ħω), H = p²/2m + mω²x²/2.
/// Stationary; the stored time is 0.
pub fn density_wigner_closed(
    n: u32,
    params: &OscillatorParams,
    xgrid: &Grid1D,
    pgrid: &Grid1D,
) -> Result<PhaseSpaceDensity> {
    let hbar = params.hbar();
    let mass = params.mass();
    let omega = params.omega();
    let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
    let pref = sign / (PI * hbar);
    let nx = xgrid.count();
    let np = pgrid.count();
    let flat: Vec<f64> = map_indexed(nx, |i| {
        let x = xgrid.point(i);
        let vx = 0.5 * mass * omega * omega * x * x;
        (0..np)
            .map(|j| {
                let p = pgrid.point(j);
                let energy = p * p / (2.0 * mass) + vx;
                let scaled = energy / (hbar * omega);
                pref * (-2.0 * scaled).exp() * laguerre(n, 4.0 * scaled)
            })
            .collect::<Vec<f64>>()
    })
    .into_iter()
    .flatten()
    .collect();
    let density = PhaseSpaceDensity {
        xgrid: *xgrid,
        pgrid: *pgrid,
        values: Array2::from_shape_vec((nx, np), flat).expect("row-major layout"),
        rule: DensityRule::WignerB,
        params: *params,
        time: 0.0,
    };
    density.validate_normalization()?;
    let alpha = params.alpha();
    let target: Vec<f64> = (0..nx)
        .map(|i| {
            let u = hermite_scaled(n, alpha * xgrid.point(i));
            alpha * u * u
        })
        .collect();
    density.validate_x_marginal(&target)?;
    Ok(density)
}

/// Characteristic-function construction tag.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CharacteristicRule {
    /// Z(x,δx) = ψ*(x−δx/2)ψ(x+δx/2)
    PointSplit,
    /// Z(x,δx) = |ψ(x)|²·∫ψ*(x′)ψ(x′+δx)dx′
    Factorized,
}

/// Complex characteristic function Z(x, δx) — the Fourier dual of a density
/// in the momentum variable.
#[derive(Debug, Clone)]
pub struct CharacteristicFunction {
    xgrid: Grid1D,
    dxgrid: Grid1D,
    values: Array2<Complex64>,
    rule: CharacteristicRule,
    params: OscillatorParams,
}

impl CharacteristicFunction {
    pub fn xgrid(&self) -> &Grid1D {
        &self.xgrid
    }

    pub fn dxgrid(&self) -> &Grid1D {
        &self.dxgrid
    }

    /// values[[i, k]] = Z(x_i, δx_k)
    pub fn values(&self) -> &Array2<Complex64> {
        &self.values
    }

    pub fn rule(&self) -> CharacteristicRule {
        self.rule
    }

    /// (2πħ)^{−1}∫e^{−ipδx/ħ} Z(x,δx) d(δx) on the given momentum grid:
    /// recovers the density this characteristic function is dual to.
    pub fn to_density(&self, pgrid: &Grid1D, rule: DensityRule) -> Result<PhaseSpaceDensity> {
        let hbar = self.params.hbar();
        let ddx = self.dxgrid.spacing();
        let nx = self.xgrid.count();
        let np = pgrid.count();
        let dxs = self.dxgrid.points();
        let flat: Vec<f64> = map_indexed(nx, |i| {
            (0..np)
                .map(|j| {
                    let p = pgrid.point(j);
                    let step = (-Complex64::i() * p * ddx / hbar).exp();
                    let mut phase = Complex64::new(0.0, 0.0);
                    let mut acc = Complex64::new(0.0, 0.0);
                    for (k, &dx) in dxs.iter().enumerate() {
                        if k % 128 == 0 {
                            phase = (-Complex64::i() * p * dx / hbar).exp();
                        }
                        acc += phase * self.values[[i, k]];
                        phase *= step;
                    }
                    (acc * ddx / (2.0 * PI * hbar)).re
                })
                .collect::<Vec<f64>>()
        })
        .into_iter()
        .flatten()
        .collect();
        let density = PhaseSpaceDensity {
            xgrid: self.xgrid,
            pgrid: *pgrid,
            values: Array2::from_shape_vec((nx, np), flat).expect("row-major layout"),
            rule,
            params: self.params,
            time: 0.0,
        };
        density.validate_normalization()?;
        Ok(density)
    }
}

/// Point-split characteristic function Z(x,δx) = ψ*(x−δx/2)ψ(x+δx/2).
/// The displacement grid must be symmetric about 0, which makes the
/// hermiticity Z(x,−δx) = Z*(x,δx) exact by construction.
pub fn characteristic_pointsplit(
    psi: &WaveFunction,
    dxgrid: &Grid1D,
) -> Result<CharacteristicFunction> {
    if !dxgrid.is_symmetric() {
        return Err(Error::Parameter(format!(
            "displacement grid [{:.4}, {:.4}] must be symmetric about 0",
            dxgrid.min(),
            dxgrid.max()
        )));
    }
    let nx = psi.grid().count();
    let dxs = dxgrid.points();
    let flat: Vec<Complex64> = map_indexed(nx, |i| {
        let x = psi.grid().point(i);
        dxs.iter()
            .map(|&dx| psi.value_at(x - 0.5 * dx).conj() * psi.value_at(x + 0.5 * dx))
            .collect::<Vec<Complex64>>()
    })
    .into_iter()
    .flatten()
    .collect();
    let cf = CharacteristicFunction {
        xgrid: *psi.grid(),
        dxgrid: *dxgrid,
        values: Array2::from_shape_vec((nx, dxs.len()), flat).expect("row-major layout"),
        rule: CharacteristicRule::PointSplit,
        params: *psi.params(),
    };
    validate_zero_displacement(&cf)?;
    Ok(cf)
}

/// Z(x, 0) must be real, non-negative, and integrate to 1. Checked whenever
/// the displacement grid samples δx = 0.
fn validate_zero_displacement(cf: &CharacteristicFunction) -> Result<()> {
    let Some(k0) = cf.dxgrid.index_of_zero() else {
        return Ok(());
    };
    let h = cf.xgrid.spacing();
    let mut total = 0.0;
    for i in 0..cf.xgrid.count() {
        let z = cf.values[[i, k0]];
        if z.im.abs() > 1e-12 || z.re < -1e-15 {
            return Err(Error::Accuracy(format!(
                "Z(x,0) not a real non-negative density at x={:.4}: {z}",
                cf.xgrid.point(i)
            )));
        }
        total += z.re * h;
    }
    if (total - 1.0).abs() > 1e-8 {
        return Err(Error::Accuracy(format!(
            "Z(x,0) integrates to {total:.10}, expected 1 within 1e-8"
        )));
    }
    Ok(())
}

/// Shifted overlap C(δx) = ∫ψ*(x′)ψ(x′+δx)dx′ by Riemann sum with cubic
/// interpolation for off-grid shifts.
pub fn shifted_overlap(psi: &WaveFunction, dx: f64) -> Complex64 {
    let grid = psi.grid();
    let h = grid.spacing();
    let mut acc = Complex64::new(0.0, 0.0);
    for (j, v) in psi.values().iter().enumerate() {
        acc += v.conj() * psi.value_at(grid.point(j) + dx);
    }
    acc * h
}

/// Factorized characteristic function
/// Z(x,δx) = |ψ(x)|²·∫ψ*(x′)ψ(x′+δx)dx′ — the translation-overlap form whose
/// δx-transform is the factorized density.
pub fn characteristic_factorized(
    psi: &WaveFunction,
    dxgrid: &Grid1D,
) -> Result<CharacteristicFunction> {
    let span = psi.grid().span();
    if dxgrid.min().abs().max(dxgrid.max().abs()) > span {
        return Err(Error::Domain(format!(
            "displacement grid reaches {:.4}, beyond the state grid span {span:.4}",
            dxgrid.min().abs().max(dxgrid.max().abs())
        )));
    }
    let overlaps: Vec<Complex64> =
        map_indexed(dxgrid.count(), |k| shifted_overlap(psi, dxgrid.point(k)));
    let abs2 = psi.abs2();
    let nx = abs2.len();
    let mut values = Array2::zeros((nx, dxgrid.count()));
    for i in 0..nx {
        for k in 0..dxgrid.count() {
            values[[i, k]] = abs2[i] * overlaps[k];
        }
    }
    let cf = CharacteristicFunction {
        xgrid: *psi.grid(),
        dxgrid: *dxgrid,
        values,
        rule: CharacteristicRule::Factorized,
        params: *psi.params(),
    };
    validate_zero_displacement(&cf)?;
    Ok(cf)
}

/// Rank-one characteristic amplitude ξ(x′,x) = ψ(x′)·ψ*(x).
#[derive(Debug, Clone)]
pub struct CharacteristicAmplitude {
    xpgrid: Grid1D,
    xgrid: Grid1D,
    /// values[[i, j]] = ξ(x′_i, x_j)
    values: Array2<Complex64>,
}

impl CharacteristicAmplitude {
    pub fn xpgrid(&self) -> &Grid1D {
        &self.xpgrid
    }

    pub fn xgrid(&self) -> &Grid1D {
        &self.xgrid
    }

    pub fn values(&self) -> &Array2<Complex64> {
        &self.values
    }

    /// The x′-convolution Z(x,δx) = ∫ξ*(x′,x)ξ(x′+δx,x)dx′ for one δx,
    /// evaluated from the stored array (columns interpolated for off-grid
    /// shifts). One output entry per x point.
    pub fn convolve(&self, dx: f64) -> Vec<Complex64> {
        let h = self.xpgrid.spacing();
        let n = self.xpgrid.count();
        map_indexed(self.xgrid.count(), |j| {
            let column: Vec<Complex64> = (0..n).map(|i| self.values[[i, j]]).collect();
            let mut acc = Complex64::new(0.0, 0.0);
            for (i, v) in column.iter().enumerate() {
                let shifted =
                    interp::eval_complex(&self.xpgrid, &column, self.xpgrid.point(i) + dx);
                acc += v.conj() * shifted;
            }
            acc * h
        })
    }
}

/// ξ(x′,x) = ψ(x′)·ψ*(x) on the state grid squared.
pub fn characteristic_amplitude(psi: &WaveFunction) -> CharacteristicAmplitude {
    let n = psi.grid().count();
    let v = psi.values();
    let mut values = Array2::zeros((n, n));
    for i in 0..n {
        for j in 0..n {
            values[[i, j]] = v[i] * v[j].conj();
        }
    }
    CharacteristicAmplitude {
        xpgrid: *psi.grid(),
        xgrid: *psi.grid(),
        values,
    }
}

/// Residual of the transformed Liouville equation
/// −(ħ²/m)·∂²Z/∂x∂δx + V′(x)·δx·Z = 0 for a stationary state, evaluated with
/// central differences whose steps scale with δx (hx = δx/2, hd = δx) and
/// normalized per unit δx. The equation holds through first order in the
/// displacement, so the normalized residual decays as O(δx²).
///
/// At δx = 0 the raw (unnormalized) residual is returned; the stencil
/// cancels identically there for any state.
pub fn liouville_residual(psi: &WaveFunction, potential: &Potential, dx: f64) -> Result<f64> {
    let alpha = psi.params().alpha();
    if !(0.0..=0.1 / alpha).contains(&dx) {
        return Err(Error::Parameter(format!(
            "displacement {dx} outside [0, {:.4}] (0.1/alpha)",
            0.1 / alpha
        )));
    }
    let defect = stationarity_defect(psi, potential);
    if defect > 1e-3 {
        return Err(Error::Contract(format!(
            "state is not stationary under this potential (defect {defect:.3e}); \
             the time term of the transformed Liouville equation would not vanish"
        )));
    }
    let grid = psi.grid();
    let h = grid.spacing();
    let hbar = psi.params().hbar();
    let mass = psi.params().mass();

    // resolve ψ at a point, by index when the point lands on the lattice
    let sample = |x: f64| -> Complex64 {
        let s = (x - grid.min()) / h;
        let near = s.round();
        if (s - near).abs() < 1e-9 && near >= 0.0 && (near as usize) < grid.count() {
            psi.values()[near as usize]
        } else {
            psi.value_at(x)
        }
    };
    let z = |x: f64, d: f64| -> Complex64 { sample(x - 0.5 * d).conj() * sample(x + 0.5 * d) };

    let (hx, hd, normalize) = if dx == 0.0 {
        (2.0 * h, 4.0 * h, 1.0)
    } else {
        (0.5 * dx, dx, dx)
    };
    let reach = 0.5 * (dx + hd) + hx;
    let mut worst = 0.0f64;
    for i in 0..grid.count() {
        let x = grid.point(i);
        if x - reach < grid.min() || x + reach > grid.max() {
            continue;
        }
        let mixed = (z(x + hx, dx + hd) - z(x + hx, dx - hd) - z(x - hx, dx + hd)
            + z(x - hx, dx - hd))
            / (4.0 * hx * hd);
        let term = -hbar * hbar / mass * mixed + potential.derivative(x) * dx * z(x, dx);
        worst = worst.max(term.norm() / normalize);
    }
    Ok(worst)
}

/// Kernel f(θ,τ) of the generalized construction, sampled with a mask marking
/// where it is defined. `coverage` reports the unmasked fraction of the
/// numerator-significant support.
#[derive(Debug, Clone)]
pub struct CohenKernel {
    theta_grid: Grid1D,
    tau_grid: Grid1D,
    values: Array2<Complex64>,
    mask: Array2<bool>,
    epsilon: f64,
    coverage: f64,
    id: String,
}

impl CohenKernel {
    pub fn theta_grid(&self) -> &Grid1D {
        &self.theta_grid
    }

    pub fn tau_grid(&self) -> &Grid1D {
        &self.tau_grid
    }

    /// values[[i, j]] = f(θ_i, τ_j); zero where masked.
    pub fn values(&self) -> &Array2<Complex64> {
        &self.values
    }

    pub fn mask(&self) -> &Array2<bool> {
        &self.mask
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn coverage(&self) -> f64 {
        self.coverage
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    /// The constant kernel f ≡ 1, which reproduces the point-split (rule B)
    /// density.
    pub fn unity(theta_grid: Grid1D, tau_grid: Grid1D) -> Self {
        let shape = (theta_grid.count(), tau_grid.count());
        Self {
            theta_grid,
            tau_grid,
            values: Array2::from_elem(shape, Complex64::new(1.0, 0.0)),
            mask: Array2::from_elem(shape, true),
            epsilon: 0.0,
            coverage: 1.0,
            id: "unity".into(),
        }
    }
}

/// Default (θ, τ) windows: ±12α and ±12/(ħα) with 129 points, wide enough
/// that the ambiguity function of desk-scale states decays below 1e−12 at the
/// edges, and odd so the origin is sampled exactly.
pub fn default_kernel_grids(params: &OscillatorParams) -> (Grid1D, Grid1D) {
    let alpha = params.alpha();
    let theta = Grid1D::symmetric(12.0 * alpha, 129).expect("theta grid");
    let tau = Grid1D::symmetric(12.0 / (params.hbar() * alpha), 129).expect("tau grid");
    (theta, tau)
}

/// Ambiguity transform A(θ,τ) = ∫ e^{iθu} ψ*(u−τħ/2) ψ(u+τħ/2) du.
pub fn ambiguity(psi: &WaveFunction, theta_grid: &Grid1D, tau_grid: &Grid1D) -> Array2<Complex64> {
    let grid = psi.grid();
    let h = grid.spacing();
    let hbar = psi.params().hbar();
    let us = grid.points();
    let ntheta = theta_grid.count();
    // one τ column at a time: point-split product in u, then the θ sums
    let cols: Vec<Vec<Complex64>> = map_indexed(tau_grid.count(), |j| {
        let s = 0.5 * tau_grid.point(j) * hbar;
        let w: Vec<Complex64> = us
            .iter()
            .map(|&u| psi.value_at(u - s).conj() * psi.value_at(u + s))
            .collect();
        (0..ntheta)
            .map(|i| {
                let theta = theta_grid.point(i);
                let step = (Complex64::i() * theta * h).exp();
                let mut phase = Complex64::new(1.0, 0.0);
                let mut acc = Complex64::new(0.0, 0.0);
                for (ju, wv) in w.iter().enumerate() {
                    if ju % 128 == 0 {
                        phase = (Complex64::i() * theta * us[ju]).exp();
                    }
                    acc += wv * phase;
                    phase *= step;
                }
                acc * h
            })
            .collect()
    });
    let mut values = Array2::zeros((ntheta, tau_grid.count()));
    for (j, col) in cols.iter().enumerate() {
        for (i, v) in col.iter().enumerate() {
            values[[i, j]] = *v;
        }
    }
    values
}

/// The ratio kernel that maps the generalized construction onto the
/// factorized density: numerator = double Fourier transform of |ψ(x)|²|φ(p)|²,
/// denominator = the ambiguity function. Masked where the denominator falls
/// below epsilon·max; the kernel equals 1 at the origin by construction.
pub fn cohen_kernel_factorized(
    psi: &WaveFunction,
    theta_grid: &Grid1D,
    tau_grid: &Grid1D,
    epsilon: f64,
) -> Result<CohenKernel> {
    if !(epsilon > 0.0) {
        return Err(Error::Parameter(format!("epsilon must be positive, got {epsilon}")));
    }
    let (Some(_), Some(_)) = (theta_grid.index_of_zero(), tau_grid.index_of_zero()) else {
        return Err(Error::Parameter(
            "kernel grids must sample the origin (use symmetric grids with odd counts)".into(),
        ));
    };
    let grid = psi.grid();
    let h = grid.spacing();
    let hbar = psi.params().hbar();
    let abs2 = psi.abs2();
    let xs = grid.points();

    // X(θ) = ∫|ψ|² e^{iθx} dx
    let xfactor: Vec<Complex64> = map_indexed(theta_grid.count(), |i| {
        let theta = theta_grid.point(i);
        let mut acc = Complex64::new(0.0, 0.0);
        for (j, &d) in abs2.iter().enumerate() {
            acc += d * (Complex64::i() * theta * xs[j]).exp();
        }
        acc * h
    });
    // P(τ) = ∫|φ|² e^{iτp} dp = ∫ψ*(x)ψ(x+τħ)dx
    let pfactor: Vec<Complex64> = map_indexed(tau_grid.count(), |j| {
        shifted_overlap(psi, tau_grid.point(j) * hbar)
    });

    let denom = ambiguity(psi, theta_grid, tau_grid);
    let denom_peak = denom.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let shape = (theta_grid.count(), tau_grid.count());
    let mut values = Array2::from_elem(shape, Complex64::new(0.0, 0.0));
    let mut mask = Array2::from_elem(shape, false);
    let mut numer_norms = Array2::zeros(shape);
    let mut numer_peak = 0.0f64;
    for i in 0..shape.0 {
        for j in 0..shape.1 {
            let numer = xfactor[i] * pfactor[j];
            numer_norms[[i, j]] = numer.norm();
            numer_peak = numer_peak.max(numer.norm());
            let d = denom[[i, j]];
            if d.norm() > epsilon * denom_peak {
                values[[i, j]] = numer / d;
                mask[[i, j]] = true;
            }
        }
    }
    let mut significant = 0usize;
    let mut covered = 0usize;
    for i in 0..shape.0 {
        for j in 0..shape.1 {
            if numer_norms[[i, j]] > epsilon * numer_peak {
                significant += 1;
                if mask[[i, j]] {
                    covered += 1;
                }
            }
        }
    }
    let coverage = covered as f64 / significant.max(1) as f64;
    let kernel = CohenKernel {
        theta_grid: *theta_grid,
        tau_grid: *tau_grid,
        values,
        mask,
        epsilon,
        coverage,
        id: "factorized".into(),
    };
    let i0 = theta_grid.index_of_zero().unwrap();
    let j0 = tau_grid.index_of_zero().unwrap();
    let origin = kernel.values[[i0, j0]];
    if (origin - Complex64::new(1.0, 0.0)).norm() > 1e-8 {
        return Err(Error::Accuracy(format!(
            "kernel origin value {origin} deviates from 1 beyond 1e-8"
        )));
    }
    Ok(kernel)
}

/// Raw generalized-construction transform: returns the density samples and
/// the fraction of the ambiguity-significant support the kernel mask covers,
/// without enforcing any coverage or normalization contract. The public
/// [`cohen_distribution`] wraps this with both checks.
pub fn cohen_transform(
    psi: &WaveFunction,
    kernel: &CohenKernel,
    xgrid: &Grid1D,
    pgrid: &Grid1D,
) -> (Array2<f64>, f64) {
    let theta_grid = kernel.theta_grid();
    let tau_grid = kernel.tau_grid();
    let amb = ambiguity(psi, theta_grid, tau_grid);
    let amb_peak = amb.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let mut significant = 0usize;
    let mut covered = 0usize;
    let shape = (theta_grid.count(), tau_grid.count());
    let mut weighted = Array2::from_elem(shape, Complex64::new(0.0, 0.0));
    for i in 0..shape.0 {
        for j in 0..shape.1 {
            if amb[[i, j]].norm() > kernel.epsilon() * amb_peak {
                significant += 1;
                if kernel.mask[[i, j]] {
                    covered += 1;
                }
            }
            if kernel.mask[[i, j]] {
                weighted[[i, j]] = kernel.values[[i, j]] * amb[[i, j]];
            }
        }
    }
    let coverage = covered as f64 / significant.max(1) as f64;

    let dtheta = theta_grid.spacing();
    let dtau = tau_grid.spacing();
    let thetas = theta_grid.points();
    let taus = tau_grid.points();
    let np = pgrid.count();
    // chained 1-D transforms: θ → x, then τ → p
    let flat: Vec<f64> = map_indexed(xgrid.count(), |ix| {
        let x = xgrid.point(ix);
        let mid: Vec<Complex64> = (0..shape.1)
            .map(|j| {
                let mut acc = Complex64::new(0.0, 0.0);
                for (i, &theta) in thetas.iter().enumerate() {
                    acc += weighted[[i, j]] * (-Complex64::i() * theta * x).exp();
                }
                acc * dtheta
            })
            .collect();
        (0..np)
            .map(|jp| {
                let p = pgrid.point(jp);
                let mut acc = Complex64::new(0.0, 0.0);
                for (j, &tau) in taus.iter().enumerate() {
                    acc += mid[j] * (-Complex64::i() * tau * p).exp();
                }
                (acc * dtau).re / (4.0 * PI * PI)
            })
            .collect::<Vec<f64>>()
    })
    .into_iter()
    .flatten()
    .collect();
    let values = Array2::from_shape_vec((xgrid.count(), np), flat).expect("row-major layout");
    (values, coverage)
}

/// F(x,p;f) = (1/4π²)∭ e^{−iθx−iτp+iθu} f(θ,τ) ψ*(u−τħ/2)ψ(u+τħ/2) dθ dτ du,
/// evaluated as two chained transforms through the ambiguity function.
///
/// Errors if the kernel mask covers less than 99% of the state's
/// ambiguity-significant support (the construction would lose real mass).
pub fn cohen_distribution(
    psi: &WaveFunction,
    kernel: &CohenKernel,
    xgrid: &Grid1D,
    pgrid: &Grid1D,
) -> Result<PhaseSpaceDensity> {
    let (values, coverage) = cohen_transform(psi, kernel, xgrid, pgrid);
    if coverage < 0.99 {
        return Err(Error::Accuracy(format!(
            "kernel mask covers only {:.2}% of the required support (need 99%)",
            100.0 * coverage
        )));
    }
    let density = PhaseSpaceDensity {
        xgrid: *xgrid,
        pgrid: *pgrid,
        values,
        rule: DensityRule::Cohen(kernel.id().to_string()),
        params: *psi.params(),
        time: psi.time(),
    };
    density.validate_normalization()?;
    Ok(density)
}
