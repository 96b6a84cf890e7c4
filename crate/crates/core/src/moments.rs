//! Expectation values under both correspondence rules.
//!
//! Rule A factorizes: ⟨xⁿpᵐ⟩ = ⟨xⁿ⟩·⟨pᵐ⟩, the product of 1-D integrals the
//! commuting operator assignment guarantees. Rule B integrates xⁿpᵐ against
//! the point-split density (equivalently, takes δx-derivatives of the
//! point-split characteristic function at δx → 0). The two rules agree on
//! all lateral moments (pure powers of x or p) and differ on mixed products;
//! [`table1`] tabulates the harmonic-oscillator comparison, where every
//! integrand is polynomial × Gaussian and α-mapped Gauss–Hermite rules make
//! the entries exact to rounding.

use crate::density::{characteristic_pointsplit, PhaseSpaceDensity};
use crate::error::{Error, Result};
use crate::grid::Grid1D;
use crate::parallel::map_indexed;
use crate::potential::Potential;
use crate::specfun::{gauss_hermite, hermite_normalized, laguerre};
use crate::states::{MomentumWaveFunction, OscillatorParams, WaveFunction};
use std::f64::consts::PI;

/// Which correspondence rule produced a moment.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MomentRule {
    /// Factorized (commuting) rule.
    A,
    /// Point-split/Wigner rule.
    B,
    /// Pure power of x or p, identical under both rules.
    Lateral,
}

/// How a moment was evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MomentMethod {
    /// 2-D Riemann integration against a sampled density.
    Quadrature2D,
    /// Product of 1-D integrals over the state pair.
    Factorized1D,
    /// Gauss–Hermite quadrature on a closed form.
    ClosedForm,
    /// δx finite differences on the point-split characteristic function.
    FiniteDifference,
}

/// An expectation value ⟨x^{n_x} p^{m_p}⟩ with provenance and an error
/// estimate from re-evaluation at a refined resolution.
#[derive(Debug, Clone, Copy)]
pub struct MomentResult {
    pub n_x: u32,
    pub m_p: u32,
    pub value: f64,
    pub rule: MomentRule,
    pub method: MomentMethod,
    pub est_error: f64,
}

fn lateral_or(rule: MomentRule, n_x: u32, m_p: u32) -> MomentRule {
    if n_x == 0 || m_p == 0 {
        MomentRule::Lateral
    } else {
        rule
    }
}

/// ∬ x^{n_x} p^{m_p} F(x,p) dx dp by 2-D Riemann quadrature. The error
/// estimate is the delta against a stride-2 re-evaluation.
pub fn moment_phase_space(
    density: &PhaseSpaceDensity,
    n_x: u32,
    m_p: u32,
) -> Result<MomentResult> {
    if n_x + m_p > 8 {
        return Err(Error::Accuracy(format!(
            "requested power x^{n_x} p^{m_p} exceeds the grid accuracy budget (n_x + m_p <= 8)"
        )));
    }
    let norm = density.normalization();
    if (norm - 1.0).abs() > 1e-6 {
        return Err(Error::Contract(format!(
            "density normalization {norm:.8} violates the unit-mass precondition"
        )));
    }
    let full = grid_moment(density, n_x, m_p, 1);
    let coarse = grid_moment(density, n_x, m_p, 2);
    Ok(MomentResult {
        n_x,
        m_p,
        value: full,
        rule: lateral_or(
            match density.rule() {
                crate::density::DensityRule::FactorizedA => MomentRule::A,
                _ => MomentRule::B,
            },
            n_x,
            m_p,
        ),
        method: MomentMethod::Quadrature2D,
        est_error: (full - coarse).abs(),
    })
}

fn grid_moment(density: &PhaseSpaceDensity, n_x: u32, m_p: u32, stride: usize) -> f64 {
    let xg = density.xgrid();
    let pg = density.pgrid();
    let dx = xg.spacing() * stride as f64;
    let dp = pg.spacing() * stride as f64;
    let values = density.values();
    let mut acc = 0.0;
    let mut i = 0;
    while i < xg.count() {
        let xw = xg.point(i).powi(n_x as i32);
        let mut j = 0;
        let mut row = 0.0;
        while j < pg.count() {
            row += pg.point(j).powi(m_p as i32) * values[[i, j]];
            j += stride;
        }
        acc += xw * row;
        i += stride;
    }
    acc * dx * dp
}

/// Rule A: (∫|ψ|²xⁿdx)·(∫|φ|²pᵐdp). The factorization ⟨xⁿpᵐ⟩ = ⟨xⁿ⟩⟨pᵐ⟩ is
/// structural, not approximate.
pub fn moment_rule_a(
    psi: &WaveFunction,
    phi: &MomentumWaveFunction,
    n_x: u32,
    m_p: u32,
) -> MomentResult {
    let x_full = state_x_moment(psi, n_x, 1);
    let x_coarse = state_x_moment(psi, n_x, 2);
    let p_full = state_p_moment(phi, m_p, 1);
    let p_coarse = state_p_moment(phi, m_p, 2);
    let value = x_full * p_full;
    let est = (value - x_coarse * p_coarse).abs();
    MomentResult {
        n_x,
        m_p,
        value,
        rule: lateral_or(MomentRule::A, n_x, m_p),
        method: MomentMethod::Factorized1D,
        est_error: est,
    }
}

fn state_x_moment(psi: &WaveFunction, k: u32, stride: usize) -> f64 {
    if k == 0 && stride == 1 {
        return psi.norm();
    }
    let g = psi.grid();
    let h = g.spacing() * stride as f64;
    let mut acc = 0.0;
    let mut i = 0;
    while i < g.count() {
        acc += g.point(i).powi(k as i32) * psi.values()[i].norm_sqr();
        i += stride;
    }
    acc * h
}

fn state_p_moment(phi: &MomentumWaveFunction, k: u32, stride: usize) -> f64 {
    if k == 0 && stride == 1 {
        return phi.norm();
    }
    let g = phi.grid();
    let h = g.spacing() * stride as f64;
    let mut acc = 0.0;
    let mut i = 0;
    while i < g.count() {
        acc += g.point(i).powi(k as i32) * phi.values()[i].norm_sqr();
        i += stride;
    }
    acc * h
}

/// Rule B through the characteristic function:
/// ⟨xⁿpᵐ⟩ = ∫ xⁿ (−iħ ∂/∂δx)ᵐ Z(x,δx)|_{δx→0} dx, with the δx-derivatives
/// taken by five-point central stencils on the on-grid displacement lattice
/// (δx steps of 2h). Supported to depth m_p ≤ 2; deeper derivatives are
/// ill-conditioned — use [`moment_phase_space`] instead.
pub fn moment_rule_b_pointsplit(
    psi: &WaveFunction,
    n_x: u32,
    m_p: u32,
) -> Result<MomentResult> {
    if m_p > 2 {
        return Err(Error::Parameter(format!(
            "finite-difference depth m_p = {m_p} unsupported (max 2); \
             integrate against the rule-B density instead"
        )));
    }
    let h = psi.grid().spacing();
    let value = pointsplit_moment(psi, n_x, m_p, 2.0 * h)?;
    let coarse = pointsplit_moment(psi, n_x, m_p, 4.0 * h)?;
    Ok(MomentResult {
        n_x,
        m_p,
        value,
        rule: lateral_or(MomentRule::B, n_x, m_p),
        method: MomentMethod::FiniteDifference,
        est_error: (value - coarse).abs(),
    })
}

fn pointsplit_moment(psi: &WaveFunction, n_x: u32, m_p: u32, s: f64) -> Result<f64> {
    let grid = psi.grid();
    let hbar = psi.params().hbar();
    // Z at δx ∈ {0, ±s, ±2s} on the displacement lattice
    let dxgrid = Grid1D::new(-2.0 * s, 2.0 * s, 5)?;
    let z = characteristic_pointsplit(psi, &dxgrid)?;
    let h = grid.spacing();
    let mut acc = 0.0;
    for i in 0..grid.count() {
        let zm2 = z.values()[[i, 0]];
        let zm1 = z.values()[[i, 1]];
        let z0 = z.values()[[i, 2]];
        let zp1 = z.values()[[i, 3]];
        let zp2 = z.values()[[i, 4]];
        let d = match m_p {
            0 => z0,
            // five-point first derivative, O(s⁴)
            1 => -num_complex::Complex64::i() * hbar * (zm2 - 8.0 * zm1 + 8.0 * zp1 - zp2)
                / (12.0 * s),
            // five-point second derivative, O(s⁴)
            2 => {
                -hbar * hbar * (-zm2 + 16.0 * zm1 - 30.0 * z0 + 16.0 * zp1 - zp2)
                    / (12.0 * s * s)
            }
            _ => unreachable!(),
        };
        acc += grid.point(i).powi(n_x as i32) * d.re;
    }
    Ok(acc * h)
}

/// Mean energy and energy dispersion of a density: Ē = ∬ H F dx dp,
/// (ΔE)² = ∬ H² F dx dp − Ē², with H = p²/2m + V(x).
pub fn energy_moments_density(
    density: &PhaseSpaceDensity,
    potential: &Potential,
) -> Result<(f64, f64)> {
    check_potential_degree(potential)?;
    let xg = density.xgrid();
    let pg = density.pgrid();
    let mass = density.params().mass();
    let dxdp = xg.spacing() * pg.spacing();
    let mut e1 = 0.0;
    let mut e2 = 0.0;
    for i in 0..xg.count() {
        let v = potential.value(xg.point(i));
        for j in 0..pg.count() {
            let p = pg.point(j);
            let h = p * p / (2.0 * mass) + v;
            let f = density.values()[[i, j]];
            e1 += h * f;
            e2 += h * h * f;
        }
    }
    e1 *= dxdp;
    e2 *= dxdp;
    Ok((e1, e2 - e1 * e1))
}

/// Rule-A energy moments straight from the state pair, using the
/// factorization of mixed terms: Ē = ⟨p²⟩/2m + ⟨V⟩,
/// ⟨H²⟩ = ⟨p⁴⟩/4m² + ⟨p²⟩⟨V⟩/m + ⟨V²⟩.
pub fn energy_moments_state(
    psi: &WaveFunction,
    phi: &MomentumWaveFunction,
    potential: &Potential,
) -> Result<(f64, f64)> {
    check_potential_degree(potential)?;
    let mass = psi.params().mass();
    let p2 = state_p_moment(phi, 2, 1);
    let p4 = state_p_moment(phi, 4, 1);
    let v1 = psi.mean_potential(potential);
    let h = psi.grid().spacing();
    let v2: f64 = psi
        .values()
        .iter()
        .enumerate()
        .map(|(i, amp)| {
            let v = potential.value(psi.grid().point(i));
            v * v * amp.norm_sqr()
        })
        .sum::<f64>()
        * h;
    let e1 = p2 / (2.0 * mass) + v1;
    let e2 = p4 / (4.0 * mass * mass) + p2 * v1 / mass + v2;
    Ok((e1, e2 - e1 * e1))
}

fn check_potential_degree(potential: &Potential) -> Result<()> {
    let degree = potential.degree();
    if degree > 4 {
        return Err(Error::Accuracy(format!(
            "potential degree {degree} exceeds the quadrature exactness budget (max 4)"
        )));
    }
    Ok(())
}

/// ⟨x^k⟩ of eigenstate n by an α-mapped Gauss–Hermite rule; exact to
/// rounding because the integrand is polynomial × e^{−u²}.
pub fn ho_moment_x(n: u32, params: &OscillatorParams, k: u32) -> f64 {
    dimensionless_moment(n, k) / params.alpha().powi(k as i32)
}

/// ⟨p^k⟩ of eigenstate n; the momentum amplitude has the same Hermite shape
/// with the scale ħα.
pub fn ho_moment_p(n: u32, params: &OscillatorParams, k: u32) -> f64 {
    dimensionless_moment(n, k) * (params.hbar() * params.alpha()).powi(k as i32)
}

fn dimensionless_moment(n: u32, k: u32) -> f64 {
    let order = (n as usize) + (k as usize) / 2 + 2;
    let rule = gauss_hermite(order).expect("order within bounds");
    rule.integrate(|u| {
        let hn = hermite_normalized(n, u);
        hn * hn * u.powi(k as i32)
    })
}

/// ∬ x^{n_x} p^{m_p} F_n^B dx dp against the closed-form rule-B density, by
/// a tensor Gauss–Hermite rule (exact: the Laguerre factor is polynomial).
pub fn wigner_moment_closed(
    n: u32,
    params: &OscillatorParams,
    n_x: u32,
    m_p: u32,
) -> f64 {
    let order = (n as usize) + (n_x.max(m_p) as usize) / 2 + 2;
    let rule = gauss_hermite(order).expect("order within bounds");
    let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
    let mut acc = 0.0;
    for (&u, &wu) in rule.nodes().iter().zip(rule.weights()) {
        for (&v, &wv) in rule.nodes().iter().zip(rule.weights()) {
            acc += wu
                * wv
                * u.powi(n_x as i32)
                * v.powi(m_p as i32)
                * laguerre(n, 2.0 * (u * u + v * v));
        }
    }
    let alpha = params.alpha();
    sign / PI * acc / alpha.powi(n_x as i32) * (params.hbar() * alpha).powi(m_p as i32)
}

/// One row of the expectation comparison: mean energy, ⟨x²⟩, the uncertainty
/// product, ⟨x⁴⟩, the mixed moment under both rules, and the energy
/// dispersion under both rules.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DispersionRow {
    pub n: u32,
    pub ebar: f64,
    pub x2bar: f64,
    pub dxdp: f64,
    pub x4bar: f64,
    pub x2p2_a: f64,
    pub x2p2_b: f64,
    pub de2_a: f64,
    pub de2_b: f64,
}

/// Exact rational values of [`table1`] in natural units:
/// Ē = ⟨x²⟩ = ΔxΔp = n+½, ⟨x⁴⟩ = 3(2n²+2n+1)/4, ⟨x²p²⟩_A = (n+½)²,
/// ⟨x²p²⟩_B = (2n²+2n+1)/4, (ΔE)²_A = (n²+n+1)/4, (ΔE)²_B = ¼.
pub fn table1_reference(n: u32) -> DispersionRow {
    let nf = n as f64;
    let half = nf + 0.5;
    let quartic = 2.0 * nf * nf + 2.0 * nf + 1.0;
    DispersionRow {
        n,
        ebar: half,
        x2bar: half,
        dxdp: half,
        x4bar: 0.75 * quartic,
        x2p2_a: half * half,
        x2p2_b: quartic / 4.0,
        de2_a: (nf * nf + nf + 1.0) / 4.0,
        de2_b: 0.25,
    }
}

/// All eight comparison columns for n = 0..=n_max, computed with α-mapped
/// Gauss–Hermite rules under both correspondence rules. The lateral columns
/// are evaluated under both rules and must agree to rounding; a mismatch is
/// an internal accuracy failure.
pub fn table1(n_max: u32, params: &OscillatorParams) -> Result<Vec<DispersionRow>> {
    if n_max > 10 {
        return Err(Error::Parameter(format!(
            "table is specified for n_max <= 10, got {n_max}"
        )));
    }
    let rows = map_indexed((n_max + 1) as usize, |i| table1_row(i as u32, params));
    rows.into_iter().collect()
}

fn table1_row(n: u32, params: &OscillatorParams) -> Result<DispersionRow> {
    let mass = params.mass();
    let omega = params.omega();
    let x1 = ho_moment_x(n, params, 1);
    let x2 = ho_moment_x(n, params, 2);
    let x4 = ho_moment_x(n, params, 4);
    let p1 = ho_moment_p(n, params, 1);
    let p2 = ho_moment_p(n, params, 2);
    let p4 = ho_moment_p(n, params, 4);

    // lateral agreement between the factorized route and the rule-B density
    for (k, a) in [(1u32, x1), (2, x2), (4, x4)] {
        let b = wigner_moment_closed(n, params, k, 0);
        lateral_agreement(n, "x", k, a, b)?;
    }
    for (k, a) in [(1u32, p1), (2, p2), (4, p4)] {
        let b = wigner_moment_closed(n, params, 0, k);
        lateral_agreement(n, "p", k, a, b)?;
    }

    let ebar = p2 / (2.0 * mass) + 0.5 * mass * omega * omega * x2;
    let dxdp = ((x2 - x1 * x1) * (p2 - p1 * p1)).sqrt();
    let x2p2_a = x2 * p2;
    let x2p2_b = wigner_moment_closed(n, params, 2, 2);

    let h2_a = p4 / (4.0 * mass * mass)
        + 0.5 * omega * omega * x2 * p2
        + 0.25 * mass * mass * omega.powi(4) * x4;
    let de2_a = h2_a - ebar * ebar;

    let w40 = wigner_moment_closed(n, params, 4, 0);
    let w04 = wigner_moment_closed(n, params, 0, 4);
    let h2_b = w04 / (4.0 * mass * mass)
        + 0.5 * omega * omega * x2p2_b
        + 0.25 * mass * mass * omega.powi(4) * w40;
    let de2_b = h2_b - ebar * ebar;

    Ok(DispersionRow {
        n,
        ebar,
        x2bar: x2,
        dxdp,
        x4bar: x4,
        x2p2_a,
        x2p2_b,
        de2_a,
        de2_b,
    })
}

fn lateral_agreement(n: u32, var: &str, k: u32, a: f64, b: f64) -> Result<()> {
    let scale = a.abs().max(1.0);
    if (a - b).abs() > 1e-9 * scale {
        return Err(Error::Accuracy(format!(
            "lateral moment <{var}^{k}> of eigenstate {n} disagrees between rules: {a} vs {b}"
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::density::{density_factorized, density_wigner_closed};
    use crate::states::{
        default_momentum_grid, default_position_grid, ho_eigenstate, momentum_transform,
    };
    use crate::specfun::hermite_scaled;

    fn natural() -> OscillatorParams {
        OscillatorParams::natural()
    }

    fn eigenpair(n: u32) -> (WaveFunction, MomentumWaveFunction) {
        let params = natural();
        let grid = default_position_grid(n, &params);
        let psi = ho_eigenstate(n, &params, &grid, 0.0).unwrap();
        let pgrid = Grid1D::symmetric(default_momentum_grid(n, &params).max(), 241).unwrap();
        let phi = momentum_transform(&psi, &pgrid).unwrap();
        (psi, phi)
    }

    /// Independent Riemann-sum oracle for eigenstate moments, bypassing the
    /// Gauss–Hermite route entirely.
    fn riemann_x_moment(n: u32, k: u32) -> f64 {
        let half = 30.0;
        let count = 30001;
        let h = 2.0 * half / (count - 1) as f64;
        (0..count)
            .map(|i| {
                let x = -half + i as f64 * h;
                let u = hermite_scaled(n, x);
                u * u * x.powi(k as i32) * h
            })
            .sum()
    }

    #[test]
    fn gauss_hermite_engine_matches_riemann_oracle() {
        let params = natural();
        for n in 0..=6u32 {
            for k in [0u32, 1, 2, 4] {
                let gh = ho_moment_x(n, &params, k);
                let oracle = riemann_x_moment(n, k);
                assert!(
                    (gh - oracle).abs() < 1e-9 * oracle.abs().max(1.0),
                    "n={n} k={k}: {gh} vs {oracle}"
                );
            }
        }
    }

    #[test]
    fn energy_dispersion_rule_a_brute_force() {
        // (ΔE)²_A from ⟨x⁴⟩, ⟨p⁴⟩, ⟨x²⟩⟨p²⟩ via the Riemann oracle alone;
        // in natural units the p-moments equal the x-moments.
        for n in 0..=6u32 {
            let x2 = riemann_x_moment(n, 2);
            let x4 = riemann_x_moment(n, 4);
            let h2 = (x4 + 2.0 * x2 * x2 + x4) / 4.0;
            let ebar = x2; // p²/2 + x²/2 with ⟨p²⟩ = ⟨x²⟩
            let de2 = h2 - ebar * ebar;
            let nf = n as f64;
            let closed = (nf * nf + nf + 1.0) / 4.0;
            assert!((de2 - closed).abs() < 1e-8, "n={n}: {de2} vs {closed}");
        }
    }

    #[test]
    fn moment_phase_space_table_entries() {
        let (psi, phi) = eigenpair(1);
        let fa = density_factorized(&psi, &phi).unwrap();
        let m = moment_phase_space(&fa, 2, 2).unwrap();
        assert!((m.value - 2.25).abs() < 1e-8, "{}", m.value);
        assert_eq!(m.rule, MomentRule::A);

        let params = natural();
        let xgrid = default_position_grid(2, &params);
        let pgrid = Grid1D::symmetric(default_momentum_grid(2, &params).max(), 241).unwrap();
        let fb = density_wigner_closed(2, &params, &xgrid, &pgrid).unwrap();
        let m = moment_phase_space(&fb, 2, 2).unwrap();
        assert!((m.value - 3.25).abs() < 1e-8, "{}", m.value);
        assert_eq!(m.rule, MomentRule::B);

        // parity: odd moments vanish
        let m = moment_phase_space(&fb, 1, 0).unwrap();
        assert!(m.value.abs() < 1e-10, "{}", m.value);
        assert_eq!(m.rule, MomentRule::Lateral);
    }

    #[test]
    fn moment_phase_space_rejects_high_power() {
        let (psi, phi) = eigenpair(0);
        let fa = density_factorized(&psi, &phi).unwrap();
        assert!(matches!(
            moment_phase_space(&fa, 5, 4),
            Err(Error::Accuracy(_))
        ));
    }

    #[test]
    fn rule_a_table_entries() {
        let (psi, phi) = eigenpair(0);
        let m = moment_rule_a(&psi, &phi, 2, 2);
        assert!((m.value - 0.25).abs() < 1e-8, "{}", m.value);
        let (psi3, phi3) = eigenpair(3);
        let m = moment_rule_a(&psi3, &phi3, 2, 2);
        assert!((m.value - 12.25).abs() < 1e-8, "{}", m.value);
    }

    #[test]
    fn rule_a_factorization_is_structural() {
        let (psi, phi) = eigenpair(2);
        let mixed = moment_rule_a(&psi, &phi, 3, 2);
        let x = moment_rule_a(&psi, &phi, 3, 0);
        let p = moment_rule_a(&psi, &phi, 0, 2);
        assert!((mixed.value - x.value * p.value).abs() <= 1e-10 * mixed.value.abs().max(1.0));
    }

    #[test]
    fn rule_a_lateral_collapses_to_phase_space() {
        let (psi, phi) = eigenpair(2);
        let fa = density_factorized(&psi, &phi).unwrap();
        for k in 1..=4u32 {
            let a = moment_rule_a(&psi, &phi, k, 0);
            let g = moment_phase_space(&fa, k, 0).unwrap();
            let tol = 1e-8f64.max(a.est_error).max(g.est_error);
            assert!((a.value - g.value).abs() <= tol, "k={k}");
        }
    }

    #[test]
    fn pointsplit_moments() {
        let (psi1, _) = eigenpair(1);
        let m = moment_rule_b_pointsplit(&psi1, 0, 2).unwrap();
        assert!((m.value - 1.5).abs() < 1e-5, "{}", m.value);
        assert_eq!(m.rule, MomentRule::Lateral);

        let (psi0, _) = eigenpair(0);
        let m = moment_rule_b_pointsplit(&psi0, 0, 1).unwrap();
        assert!(m.value.abs() < 1e-10, "{}", m.value);

        // depth limit
        assert!(matches!(
            moment_rule_b_pointsplit(&psi0, 0, 3),
            Err(Error::Parameter(_))
        ));
    }

    #[test]
    fn pointsplit_cross_checks_phase_space_route() {
        let params = natural();
        let (psi2, _) = eigenpair(2);
        let m = moment_rule_b_pointsplit(&psi2, 2, 2).unwrap();
        let xgrid = default_position_grid(2, &params);
        let pgrid = Grid1D::symmetric(default_momentum_grid(2, &params).max(), 241).unwrap();
        let fb = density_wigner_closed(2, &params, &xgrid, &pgrid).unwrap();
        let g = moment_phase_space(&fb, 2, 2).unwrap();
        assert!((m.value - g.value).abs() < 1e-5, "{} vs {}", m.value, g.value);
        assert!((m.value - 3.25).abs() < 1e-5);
    }

    #[test]
    fn energy_moments_match_table() {
        let params = natural();
        let pot = Potential::Harmonic { mass: 1.0, omega: 1.0 };
        // rule A for n=2: Ē = 5/2, (ΔE)² = 7/4
        let (psi2, phi2) = eigenpair(2);
        let fa = density_factorized(&psi2, &phi2).unwrap();
        let (e, de2) = energy_moments_density(&fa, &pot).unwrap();
        assert!((e - 2.5).abs() < 1e-8, "{e}");
        assert!((de2 - 1.75).abs() < 1e-7, "{de2}");
        let (e_s, de2_s) = energy_moments_state(&psi2, &phi2, &pot).unwrap();
        assert!((e_s - 2.5).abs() < 1e-8);
        assert!((de2_s - 1.75).abs() < 1e-8);

        // rule B for n=3: (ΔE)² = 1/4
        let xgrid = default_position_grid(3, &params);
        let pgrid = Grid1D::symmetric(default_momentum_grid(3, &params).max(), 241).unwrap();
        let fb = density_wigner_closed(3, &params, &xgrid, &pgrid).unwrap();
        let (e, de2) = energy_moments_density(&fb, &pot).unwrap();
        assert!((e - 3.5).abs() < 1e-8, "{e}");
        assert!((de2 - 0.25).abs() < 1e-7, "{de2}");
    }

    #[test]
    fn energy_moments_reject_high_degree() {
        let (psi, phi) = eigenpair(0);
        let sextic = Potential::Polynomial { coeffs: vec![0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0] };
        assert!(energy_moments_state(&psi, &phi, &sextic).is_err());
    }

    #[test]
    fn table_rows_match_reference_fractions() {
        let params = natural();
        let rows = table1(3, &params).unwrap();
        for row in &rows {
            let want = table1_reference(row.n);
            for (got, expect) in [
                (row.ebar, want.ebar),
                (row.x2bar, want.x2bar),
                (row.dxdp, want.dxdp),
                (row.x4bar, want.x4bar),
                (row.x2p2_a, want.x2p2_a),
                (row.x2p2_b, want.x2p2_b),
                (row.de2_a, want.de2_a),
                (row.de2_b, want.de2_b),
            ] {
                assert!(
                    (got - expect).abs() < 1e-10,
                    "row {}: {got} vs {expect}",
                    row.n
                );
            }
        }
        // spot-check the frozen fractions themselves
        let r1 = table1_reference(1);
        assert_eq!(
            [r1.ebar, r1.x2bar, r1.dxdp, r1.x4bar, r1.x2p2_a, r1.x2p2_b, r1.de2_a, r1.de2_b],
            [1.5, 1.5, 1.5, 3.75, 2.25, 1.25, 0.75, 0.25]
        );
        let r3 = table1_reference(3);
        assert_eq!(
            [r3.ebar, r3.x2bar, r3.dxdp, r3.x4bar, r3.x2p2_a, r3.x2p2_b, r3.de2_a, r3.de2_b],
            [3.5, 3.5, 3.5, 18.75, 12.25, 6.25, 3.25, 0.25]
        );
        let r0 = table1_reference(0);
        assert_eq!(r0.x2p2_a, r0.x2p2_b);
    }

    #[test]
    fn table_in_explicit_units() {
        let params = OscillatorParams::new(2.0, 0.5, 1.5).unwrap();
        let rows = table1(2, &params).unwrap();
        for row in &rows {
            // Ē = ħω(n+½) and (ΔE)²_B = (ħω)²/4 in any units
            let hw = params.hbar() * params.omega();
            assert!((row.ebar - hw * (row.n as f64 + 0.5)).abs() < 1e-10);
            assert!((row.de2_b - hw * hw / 4.0).abs() < 1e-10);
            // ΔxΔp = (n+½)ħ
            assert!((row.dxdp - params.hbar() * (row.n as f64 + 0.5)).abs() < 1e-10);
        }
    }

    #[test]
    fn dispersion_contrast() {
        let params = natural();
        let rows = table1(6, &params).unwrap();
        for pair in rows.windows(2) {
            assert!(pair[1].de2_a > pair[0].de2_a, "rule A dispersion must grow");
            assert!((pair[1].de2_b - 0.25).abs() < 1e-10, "rule B dispersion constant");
        }
    }

    #[test]
    fn table_rejects_large_n() {
        assert!(table1(11, &natural()).is_err());
    }

    #[test]
    fn lateral_moments_agree_between_rules_on_states() {
        let (psi, phi) = eigenpair(4);
        let fa = density_factorized(&psi, &phi).unwrap();
        for k in 0..=4u32 {
            let a = moment_phase_space(&fa, k, 0).unwrap();
            let gh = ho_moment_x(4, &natural(), k);
            assert!((a.value - gh).abs() < 1e-7, "k={k}: {} vs {gh}", a.value);
        }
    }
}
