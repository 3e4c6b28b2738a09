//! The flat hyperKähler target H^n = V ⊕ V*: Kähler forms, the permuting and
//! torus actions, moment maps, horizontal projection, and the Euler field.
//!
//! Factor coordinates split as q = f + g·j with f = w + xi and g = y + zi.
//! The structure U(1) acts by left multiplication with the unit complex phase,
//! which is (v, w) ↦ (z·v, z⁻¹·w) in the V ⊕ V* coordinates v = f, w = conj(g).
//! The weight-1 moment map in literal sp(1) components is
//!   μ = ½(|f|² − |g|²)·i + Im⟨f,g⟩·(−j)·(−1) ... stored as
//!   (m_i, m_j, m_k) = (½(a²+b²−c²−d²), bc − ad, ac + bd),
//! and the complex readout pinned project-wide is μ_C = ⟨f,g⟩ = conj(f)·g,
//! i.e. Re μ_C = m_k and Im μ_C = −m_j. The β-coefficient map Φ sends
//! (m_i, m_j, m_k) ↦ (m_i, m_k, −m_j).

use crate::error::CoreError;
use crate::linalg::solve_dense;
use crate::quat::{apply_complex_structure, ImQuaternion, Quaternion};
use crate::tol;
use num_complex::Complex64;

/// A point of H^n.
#[derive(Clone, Debug, PartialEq)]
pub struct TargetPoint {
    pub coords: Vec<Quaternion>,
}

impl TargetPoint {
    pub fn new(coords: Vec<Quaternion>) -> Self {
        Self { coords }
    }

    pub fn origin(n: usize) -> Self {
        Self::new(vec![Quaternion::ZERO; n])
    }

    pub fn n_factors(&self) -> usize {
        self.coords.len()
    }

    pub fn norm_sq(&self) -> f64 {
        self.coords.iter().map(|q| q.norm_sq()).sum()
    }

    /// Complex splitting of one factor: q = f + g·j.
    pub fn complex_parts(q: Quaternion) -> (Complex64, Complex64) {
        (Complex64::new(q.w, q.x), Complex64::new(q.y, q.z))
    }

    /// Inverse of [`Self::complex_parts`].
    pub fn from_complex_parts(f: Complex64, g: Complex64) -> Quaternion {
        Quaternion::new(f.re, f.im, g.re, g.im)
    }
}

/// Integer-weight torus symmetry data: one structure U(1) generator plus an
/// m-torus of auxiliary generators, all acting by left complex phases.
#[derive(Clone, Debug, PartialEq)]
pub struct TorusAction {
    weights: Vec<i64>,
    aux_weights: Vec<Vec<i64>>,
}

impl TorusAction {
    pub fn new(weights: Vec<i64>, aux_weights: Vec<Vec<i64>>) -> Result<Self, CoreError> {
        let n = weights.len();
        if n == 0 {
            return Err(CoreError::ActionMismatch("no quaternionic factors".into()));
        }
        for (k, row) in aux_weights.iter().enumerate() {
            if row.len() != n {
                return Err(CoreError::ActionMismatch(format!(
                    "auxiliary weight row {k} has length {} but the target has {n} factors",
                    row.len()
                )));
            }
        }
        Ok(Self { weights, aux_weights })
    }

    /// Weight-1 structure action on H^1; the workhorse configuration.
    pub fn standard() -> Self {
        Self::new(vec![1], vec![]).expect("valid")
    }

    pub fn n_factors(&self) -> usize {
        self.weights.len()
    }

    pub fn aux_count(&self) -> usize {
        self.aux_weights.len()
    }

    pub fn weights(&self) -> &[i64] {
        &self.weights
    }

    pub fn aux_weights(&self, k: usize) -> &[i64] {
        &self.aux_weights[k]
    }

    fn factor_weight(&self, gen: Generator, a: usize) -> i64 {
        match gen {
            Generator::Structure => self.weights[a],
            Generator::Aux(k) => self.aux_weights[k][a],
        }
    }
}

/// Selects one torus generator.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Generator {
    Structure,
    Aux(usize),
}

/// Moment values of every generator at a point: literal sp(1) ≅ Im(H)
/// components (coefficients of i, j, k).
#[derive(Clone, Debug, PartialEq)]
pub struct MomentValue {
    pub structure: ImQuaternion,
    pub aux: Vec<ImQuaternion>,
}

impl MomentValue {
    pub fn generator(&self, gen: Generator) -> ImQuaternion {
        match gen {
            Generator::Structure => self.structure,
            Generator::Aux(k) => self.aux[k],
        }
    }

    /// Real component μ_R = ½(‖v‖² − ‖w‖²) of the structure moment.
    pub fn mu_r(&self) -> f64 {
        self.structure.x
    }

    /// Complex component μ_C = ⟨v, w⟩ of the structure moment.
    pub fn mu_c(&self) -> Complex64 {
        Complex64::new(self.structure.z, -self.structure.y)
    }

    /// Norm of the structure moment.
    pub fn structure_norm(&self) -> f64 {
        self.structure.norm()
    }
}

/// β-coefficients of an sp(1)* value: Φ(m) = (m_i, m_k, −m_j), i.e.
/// (μ_R, Re μ_C, Im μ_C) on (β₀, β₁, β₂).
#[inline]
pub fn beta_coefficients(m: ImQuaternion) -> [f64; 3] {
    [m.x, m.z, -m.y]
}

/// Inverse of [`beta_coefficients`].
#[inline]
pub fn moment_from_beta(b: [f64; 3]) -> ImQuaternion {
    ImQuaternion::new(b[0], -b[2], b[1])
}

/// Weight-1 moment of a single quaternionic factor, literal (i, j, k)
/// components.
#[inline]
pub fn factor_moment(q: Quaternion) -> ImQuaternion {
    let (a, b, c, d) = (q.w, q.x, q.y, q.z);
    ImQuaternion::new(0.5 * (a * a + b * b - c * c - d * d), b * c - a * d, a * c + b * d)
}

fn weighted_moment(coords: &[Quaternion], weights: &[i64]) -> ImQuaternion {
    let mut m = ImQuaternion::ZERO;
    for (q, &w) in coords.iter().zip(weights) {
        if w != 0 {
            m = m + factor_moment(*q).scale(w as f64);
        }
    }
    m
}

/// HyperKähler moment map of every torus generator at p.
pub fn moment(p: &TargetPoint, action: &TorusAction) -> Result<MomentValue, CoreError> {
    check_factors(p, action)?;
    Ok(MomentValue {
        structure: weighted_moment(&p.coords, &action.weights),
        aux: action
            .aux_weights
            .iter()
            .map(|w| weighted_moment(&p.coords, w))
            .collect(),
    })
}

/// Auxiliary moment only, stacked per generator.
pub fn aux_moment(p: &TargetPoint, action: &TorusAction) -> Result<Vec<ImQuaternion>, CoreError> {
    check_factors(p, action)?;
    Ok(action
        .aux_weights
        .iter()
        .map(|w| weighted_moment(&p.coords, w))
        .collect())
}

/// Sup over auxiliary generators of |μ_g|(p).
pub fn aux_moment_norm(p: &TargetPoint, action: &TorusAction) -> Result<f64, CoreError> {
    Ok(aux_moment(p, action)?
        .iter()
        .map(|m| m.norm())
        .fold(0.0, f64::max))
}

/// Kähler 2-form ω_ξ(X, Y) = Σ_a Re(I_ξ(X_a) · conj(Y_a)). The base point is
/// part of the signature for interface stability; the flat metric ignores it.
pub fn kahler_form(
    xi: ImQuaternion,
    x: &[Quaternion],
    y: &[Quaternion],
    _at: &TargetPoint,
) -> f64 {
    let xiq = xi.as_quat();
    x.iter()
        .zip(y)
        .map(|(&xa, &ya)| apply_complex_structure(xiq, xa).dot(ya))
        .sum()
}

/// Torus action by phases: factor a rotates by the total left phase
/// weights[a]·θ + Σ_k aux_weights[k][a]·ψ_k.
pub fn group_act(
    action: &TorusAction,
    structure_phase: f64,
    aux_phases: &[f64],
    p: &TargetPoint,
) -> Result<TargetPoint, CoreError> {
    check_factors(p, action)?;
    if aux_phases.len() != action.aux_count() {
        return Err(CoreError::ActionMismatch(format!(
            "{} auxiliary phases supplied for {} generators",
            aux_phases.len(),
            action.aux_count()
        )));
    }
    let coords = p
        .coords
        .iter()
        .enumerate()
        .map(|(a, &q)| {
            let mut theta = action.weights[a] as f64 * structure_phase;
            for (k, psi) in aux_phases.iter().enumerate() {
                theta += action.aux_weights[k][a] as f64 * psi;
            }
            Quaternion::unit_complex(theta) * q
        })
        .collect();
    Ok(TargetPoint::new(coords))
}

/// Fundamental vector field K_η of one generator at p: the t-derivative of
/// the action of exp(tη) at t = 0, i.e. weight·η·(i·q) per factor.
pub fn fundamental_vector(
    action: &TorusAction,
    gen: Generator,
    eta: f64,
    p: &TargetPoint,
) -> Result<Vec<Quaternion>, CoreError> {
    check_factors(p, action)?;
    Ok(p.coords
        .iter()
        .enumerate()
        .map(|(a, &q)| (Quaternion::I * q).scale(action.factor_weight(gen, a) as f64 * eta))
        .collect())
}

/// Euler field E = grad ρ₀ for ρ₀ = ½ r²: the radial field, i.e. p itself.
pub fn euler_field(p: &TargetPoint) -> Vec<Quaternion> {
    p.coords.clone()
}

/// The hyperKähler potential ρ₀ = ½ r² of the flat cone.
pub fn hk_potential(p: &TargetPoint) -> f64 {
    0.5 * p.norm_sq()
}

/// Nearest point on the auxiliary zero level set, by Gauss-Newton steps along
/// the moment gradient directions with ½ damping on residual increase.
/// Identity when there is no auxiliary group or p already satisfies μ_g = 0.
pub fn project_zero_level(p: &TargetPoint, action: &TorusAction) -> Result<TargetPoint, CoreError> {
    check_factors(p, action)?;
    let m = action.aux_count();
    if m == 0 {
        return Ok(p.clone());
    }
    let n = p.n_factors();
    let mut coords = p.coords.clone();
    let mut residual = stack_aux_moment(&coords, action);
    let mut res_norm = norm(&residual);
    for _ in 0..tol::NEWTON_MAX_ITER {
        if res_norm <= tol::NEWTON {
            return Ok(TargetPoint::new(coords));
        }
        // Minimum-norm step: δ = −Jᵀ (J Jᵀ)⁻¹ r.
        let jac = aux_moment_jacobian(&coords, action);
        let rows = 3 * m;
        let mut gram = vec![vec![0.0; rows]; rows];
        for r in 0..rows {
            for c in 0..rows {
                gram[r][c] = dot(&jac[r], &jac[c]);
            }
        }
        let (lambda, pivot) = solve_dense(gram, residual.clone()).ok_or(
            CoreError::DegenerateFiber { pivot: 0.0 },
        )?;
        if pivot < 1e-14 {
            return Err(CoreError::DegenerateFiber { pivot });
        }
        let mut delta = vec![0.0; 4 * n];
        for (r, lam) in lambda.iter().enumerate() {
            for (k, d) in delta.iter_mut().enumerate() {
                *d -= lam * jac[r][k];
            }
        }
        // Damped update.
        let mut scale = 1.0;
        loop {
            let trial = apply_delta(&coords, &delta, scale);
            let trial_res = stack_aux_moment(&trial, action);
            let trial_norm = norm(&trial_res);
            if trial_norm < res_norm || scale < 1e-8 {
                coords = trial;
                residual = trial_res;
                res_norm = trial_norm;
                break;
            }
            scale *= 0.5;
        }
    }
    if res_norm <= tol::NEWTON {
        return Ok(TargetPoint::new(coords));
    }
    Err(CoreError::NoConvergence {
        iterations: tol::NEWTON_MAX_ITER,
        residual: res_norm,
    })
}

/// Orthogonal projection of a tangent vector onto the horizontal space
/// ker dμ_g ∩ (im K)^⊥ at p (which must sit on the auxiliary level set).
pub fn horizontal_project(
    y: &[Quaternion],
    p: &TargetPoint,
    action: &TorusAction,
) -> Result<Vec<Quaternion>, CoreError> {
    check_factors(p, action)?;
    let m = action.aux_count();
    if m == 0 {
        return Ok(y.to_vec());
    }
    let n = p.n_factors();
    // Columns spanning the complement: m fundamental vectors + 3m moment
    // gradients per auxiliary generator.
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(4 * m);
    for k in 0..m {
        let kv = fundamental_vector(action, Generator::Aux(k), 1.0, p)?;
        basis.push(flatten(&kv));
    }
    let jac = aux_moment_jacobian(&p.coords, action);
    basis.extend(jac);
    let cols = basis.len();
    let mut gram = vec![vec![0.0; cols]; cols];
    for r in 0..cols {
        for c in 0..cols {
            gram[r][c] = dot(&basis[r], &basis[c]);
        }
    }
    let yflat = flatten(y);
    let rhs: Vec<f64> = basis.iter().map(|b| dot(b, &yflat)).collect();
    let scale = gram.iter().map(|r| r.iter().fold(0.0f64, |a, v| a.max(v.abs()))).fold(0.0f64, f64::max);
    let (coeff, pivot) = solve_dense(gram, rhs).ok_or(CoreError::DegenerateFiber { pivot: 0.0 })?;
    if pivot < 1e-10 * scale.max(1.0) {
        return Err(CoreError::DegenerateFiber { pivot });
    }
    let mut out = yflat;
    for (c, b) in coeff.iter().zip(&basis) {
        for (o, v) in out.iter_mut().zip(b) {
            *o -= c * v;
        }
    }
    Ok(unflatten(&out, n))
}

/// Symmetric bilinear form associated to the structure moment map, by
/// polarization: B(X, Y) = ½ (μ(X+Y) − μ(X) − μ(Y)) with B(u, u) = μ(u).
pub fn moment_polarization(x: &[Quaternion], y: &[Quaternion], weights: &[i64]) -> ImQuaternion {
    let sum: Vec<Quaternion> = x.iter().zip(y).map(|(&a, &b)| a + b).collect();
    let m_sum = weighted_moment(&sum, weights);
    let m_x = weighted_moment(x, weights);
    let m_y = weighted_moment(y, weights);
    (m_sum - m_x - m_y).scale(0.5)
}

fn check_factors(p: &TargetPoint, action: &TorusAction) -> Result<(), CoreError> {
    if p.n_factors() != action.n_factors() {
        return Err(CoreError::ActionMismatch(format!(
            "point has {} factors, action has {}",
            p.n_factors(),
            action.n_factors()
        )));
    }
    Ok(())
}

/// Gradients of the three components of m(q) in real coordinates (a,b,c,d):
/// ∇m_i = (a,b,−c,−d), ∇m_j = (−d,c,b,−a), ∇m_k = (c,d,a,b).
fn factor_moment_gradients(q: Quaternion) -> [[f64; 4]; 3] {
    let (a, b, c, d) = (q.w, q.x, q.y, q.z);
    [[a, b, -c, -d], [-d, c, b, -a], [c, d, a, b]]
}

/// Rows of dμ_g at the given coordinates: 3 rows per auxiliary generator,
/// each of length 4n.
fn aux_moment_jacobian(coords: &[Quaternion], action: &TorusAction) -> Vec<Vec<f64>> {
    let n = coords.len();
    let mut rows = Vec::with_capacity(3 * action.aux_count());
    for weights in &action.aux_weights {
        let mut comp_rows = vec![vec![0.0; 4 * n]; 3];
        for (a, &q) in coords.iter().enumerate() {
            let w = weights[a] as f64;
            if w == 0.0 {
                continue;
            }
            let grads = factor_moment_gradients(q);
            for comp in 0..3 {
                for k in 0..4 {
                    comp_rows[comp][4 * a + k] = w * grads[comp][k];
                }
            }
        }
        rows.extend(comp_rows);
    }
    rows
}

fn stack_aux_moment(coords: &[Quaternion], action: &TorusAction) -> Vec<f64> {
    let mut out = Vec::with_capacity(3 * action.aux_count());
    for weights in &action.aux_weights {
        let m = weighted_moment(coords, weights);
        out.extend_from_slice(&[m.x, m.y, m.z]);
    }
    out
}

fn apply_delta(coords: &[Quaternion], delta: &[f64], scale: f64) -> Vec<Quaternion> {
    coords
        .iter()
        .enumerate()
        .map(|(a, &q)| {
            Quaternion::new(
                q.w + scale * delta[4 * a],
                q.x + scale * delta[4 * a + 1],
                q.y + scale * delta[4 * a + 2],
                q.z + scale * delta[4 * a + 3],
            )
        })
        .collect()
}

fn flatten(v: &[Quaternion]) -> Vec<f64> {
    let mut out = Vec::with_capacity(4 * v.len());
    for q in v {
        out.extend_from_slice(&[q.w, q.x, q.y, q.z]);
    }
    out
}

fn unflatten(v: &[f64], n: usize) -> Vec<Quaternion> {
    (0..n)
        .map(|a| Quaternion::new(v[4 * a], v[4 * a + 1], v[4 * a + 2], v[4 * a + 3]))
        .collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}
