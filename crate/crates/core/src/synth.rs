//! Seeded synthetic fields for the verification suites: trigonometric
//! polynomials (exactly periodic on the torus, so convergence ratios are
//! clean) and named twistor profiles.

use crate::lattice::{GaugeField, Lattice4, ScalarField, SpinorField, TwoFormField};
use crate::quat::Quaternion;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// A real trigonometric polynomial Σ A cos(2π k·x/L + φ) with integer modes.
#[derive(Clone, Debug)]
pub struct TrigPoly {
    extent: f64,
    terms: Vec<([i32; 4], f64, f64)>,
}

impl TrigPoly {
    pub fn new(extent: f64, terms: Vec<([i32; 4], f64, f64)>) -> Self {
        Self { extent, terms }
    }

    /// Random polynomial with `n_terms` modes, |k_μ| ≤ kmax, and at least one
    /// term mixing two axes at different frequencies so stencil degeneracies
    /// cannot cancel exactly.
    pub fn random(rng: &mut ChaCha8Rng, extent: f64, n_terms: usize, kmax: i32, amp: f64) -> Self {
        let mut terms = Vec::with_capacity(n_terms);
        for t in 0..n_terms {
            let mut k = [0i32; 4];
            loop {
                for kc in &mut k {
                    *kc = rng.gen_range(-kmax..=kmax);
                }
                if k.iter().any(|&v| v != 0) {
                    break;
                }
            }
            if t == 0 {
                k[0] = k[0].abs().max(1);
                k[1] = -(k[1].abs().max(2)).min(kmax.max(2));
            }
            let a = amp * rng.gen_range(0.2..1.0);
            let phase = rng.gen_range(0.0..std::f64::consts::TAU);
            terms.push((k, a, phase));
        }
        Self::new(extent, terms)
    }

    pub fn push_constant(&mut self, value: f64) {
        self.terms.push(([0, 0, 0, 0], value, 0.0));
    }

    pub fn eval(&self, x: [f64; 4]) -> f64 {
        let base = std::f64::consts::TAU / self.extent;
        self.terms
            .iter()
            .map(|(k, a, phase)| {
                let arg: f64 = (0..4).map(|m| base * k[m] as f64 * x[m]).sum();
                a * (arg + phase).cos()
            })
            .sum()
    }

    /// Exact continuum partial derivative ∂_μ.
    pub fn eval_deriv(&self, x: [f64; 4], mu: usize) -> f64 {
        let base = std::f64::consts::TAU / self.extent;
        self.terms
            .iter()
            .map(|(k, a, phase)| {
                let arg: f64 = (0..4).map(|m| base * k[m] as f64 * x[m]).sum();
                -a * base * k[mu] as f64 * (arg + phase).sin()
            })
            .sum()
    }

    /// Exact continuum second derivative ∂_μ∂_ν.
    pub fn eval_deriv2(&self, x: [f64; 4], mu: usize, nu: usize) -> f64 {
        let base = std::f64::consts::TAU / self.extent;
        self.terms
            .iter()
            .map(|(k, a, phase)| {
                let arg: f64 = (0..4).map(|m| base * k[m] as f64 * x[m]).sum();
                -a * base * base * (k[mu] * k[nu]) as f64 * (arg + phase).cos()
            })
            .sum()
    }

    pub fn sample(&self, lat: Lattice4) -> ScalarField {
        ScalarField::from_fn(lat, |x| self.eval(x))
    }
}

/// A quaternion-valued trig field (one polynomial per component) for each of
/// `factors` target factors.
#[derive(Clone, Debug)]
pub struct TrigSpinor {
    comps: Vec<[TrigPoly; 4]>,
}

impl TrigSpinor {
    pub fn random(
        rng: &mut ChaCha8Rng,
        extent: f64,
        factors: usize,
        n_terms: usize,
        kmax: i32,
        amp: f64,
    ) -> Self {
        let comps = (0..factors)
            .map(|_| std::array::from_fn(|_| TrigPoly::random(rng, extent, n_terms, kmax, amp)))
            .collect();
        Self { comps }
    }

    /// Adds a constant offset to every factor, e.g. to keep fields away from
    /// the singular set.
    pub fn offset(mut self, offset: Quaternion) -> Self {
        for c in &mut self.comps {
            c[0].push_constant(offset.w);
            c[1].push_constant(offset.x);
            c[2].push_constant(offset.y);
            c[3].push_constant(offset.z);
        }
        self
    }

    pub fn factors(&self) -> usize {
        self.comps.len()
    }

    pub fn eval(&self, x: [f64; 4], factor: usize) -> Quaternion {
        let c = &self.comps[factor];
        Quaternion::new(c[0].eval(x), c[1].eval(x), c[2].eval(x), c[3].eval(x))
    }

    pub fn sample(&self, lat: Lattice4) -> SpinorField {
        SpinorField::from_fn(lat, self.factors(), |x, a| self.eval(x, a))
    }
}

/// A gauge field with one trig polynomial per (generator, direction).
#[derive(Clone, Debug)]
pub struct TrigGauge {
    comps: Vec<[TrigPoly; 4]>,
}

impl TrigGauge {
    pub fn random(
        rng: &mut ChaCha8Rng,
        extent: f64,
        generators: usize,
        n_terms: usize,
        kmax: i32,
        amp: f64,
    ) -> Self {
        let comps = (0..generators)
            .map(|_| std::array::from_fn(|_| TrigPoly::random(rng, extent, n_terms, kmax, amp)))
            .collect();
        Self { comps }
    }

    pub fn generators(&self) -> usize {
        self.comps.len()
    }

    pub fn sample(&self, lat: Lattice4) -> GaugeField {
        GaugeField::from_fn(lat, self.generators(), |x, g, mu| self.comps[g][mu].eval(x))
    }
}

/// Random smooth unit self-dual coefficient field: a constant direction plus
/// trig perturbations, normalized sitewise.
pub fn random_unit_twistor(
    rng: &mut ChaCha8Rng,
    lat: Lattice4,
    n_terms: usize,
    kmax: i32,
    amp: f64,
) -> TwoFormField {
    let polys: [TrigPoly; 3] =
        std::array::from_fn(|_| TrigPoly::random(rng, lat.extent(0), n_terms, kmax, amp));
    let base: [f64; 3] = {
        let mut v = [
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
        ];
        let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt().max(0.3);
        for c in &mut v {
            *c /= n;
        }
        v
    };
    let mut out = TwoFormField::from_fn(lat, 3, |x, c| base[c] + polys[c].eval(x));
    for s in 0..lat.n_sites() {
        let v = out.site_mut(s);
        let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        for c in v {
            *c /= n;
        }
    }
    out
}

/// The named "rotation" twistor profile: an equatorial winding about one axis
/// with an optional transverse tilt. The pure winding (tilt = 0) has the
/// closed-form energy vol · (2π·winding/L)² and is a critical point of the
/// flow; a nonzero tilt makes the gradient flow descend.
pub fn rotation_profile(lat: Lattice4, axis: usize, winding: i32, tilt: f64) -> TwoFormField {
    let k = std::f64::consts::TAU * winding as f64 / lat.extent(axis);
    let taxis = (axis + 1) % 4;
    let kt = std::f64::consts::TAU / lat.extent(taxis);
    let mut out = TwoFormField::zeros(lat, 3);
    for s in 0..lat.n_sites() {
        let x = lat.position(s);
        let theta = k * x[axis];
        let t = tilt * (kt * x[taxis]).sin();
        let v = out.site_mut(s);
        v[0] = theta.cos();
        v[1] = theta.sin();
        v[2] = t;
        let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        for c in v {
            *c /= n;
        }
    }
    out
}
