//! Quaternion arithmetic, the sp(1)-parametrized complex structures I_ξ, and
//! Clifford multiplication on the module W⁺ ⊕ W⁻.
//!
//! Conventions pinned project-wide:
//!  - Hamilton product with i·j = k.
//!  - I_ξ(v) = v·conj(ξ), extended from unit imaginary ξ to all of H. This
//!    satisfies I_i I_j = I_k and the permuting equivariance
//!    dq ∘ I_ξ ∘ dq⁻¹ = I_{qξq̄} for dq(v) = v·conj(q).
//!  - R⁴ ≅ H by (e₀, e₁, e₂, e₃) ↦ (1, −i, −j, −k); Clifford multiplication
//!    of a covector h acts as the block map (plus, minus) ↦
//!    (−I_{conj h}(minus), I_h(plus)).

use crate::error::CoreError;
use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};

/// A quaternion w + xi + yj + zk.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Quaternion {
    pub w: f64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Quaternion {
    pub const ZERO: Self = Self::new(0.0, 0.0, 0.0, 0.0);
    pub const ONE: Self = Self::new(1.0, 0.0, 0.0, 0.0);
    pub const I: Self = Self::new(0.0, 1.0, 0.0, 0.0);
    pub const J: Self = Self::new(0.0, 0.0, 1.0, 0.0);
    pub const K: Self = Self::new(0.0, 0.0, 0.0, 1.0);

    #[inline]
    pub const fn new(w: f64, x: f64, y: f64, z: f64) -> Self {
        Self { w, x, y, z }
    }

    #[inline]
    pub const fn real(w: f64) -> Self {
        Self::new(w, 0.0, 0.0, 0.0)
    }

    /// The unit complex number cos θ + sin θ · i, used for U(1) phases.
    #[inline]
    pub fn unit_complex(theta: f64) -> Self {
        Self::new(theta.cos(), theta.sin(), 0.0, 0.0)
    }

    #[inline]
    pub fn conj(self) -> Self {
        Self::new(self.w, -self.x, -self.y, -self.z)
    }

    #[inline]
    pub fn norm_sq(self) -> f64 {
        self.w * self.w + self.x * self.x + self.y * self.y + self.z * self.z
    }

    #[inline]
    pub fn norm(self) -> f64 {
        self.norm_sq().sqrt()
    }

    /// Euclidean pairing ⟨a, b⟩ = Re(a · conj(b)).
    #[inline]
    pub fn dot(self, other: Self) -> f64 {
        self.w * other.w + self.x * other.x + self.y * other.y + self.z * other.z
    }

    #[inline]
    pub fn scale(self, s: f64) -> Self {
        Self::new(self.w * s, self.x * s, self.y * s, self.z * s)
    }

    pub fn inverse(self) -> Option<Self> {
        let n = self.norm_sq();
        if n == 0.0 {
            None
        } else {
            Some(self.conj().scale(1.0 / n))
        }
    }

    #[inline]
    pub fn im(self) -> ImQuaternion {
        ImQuaternion::new(self.x, self.y, self.z)
    }
}

impl Add for Quaternion {
    type Output = Self;
    #[inline]
    fn add(self, o: Self) -> Self {
        Self::new(self.w + o.w, self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl AddAssign for Quaternion {
    #[inline]
    fn add_assign(&mut self, o: Self) {
        *self = *self + o;
    }
}

impl Sub for Quaternion {
    type Output = Self;
    #[inline]
    fn sub(self, o: Self) -> Self {
        Self::new(self.w - o.w, self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl SubAssign for Quaternion {
    #[inline]
    fn sub_assign(&mut self, o: Self) {
        *self = *self - o;
    }
}

impl Neg for Quaternion {
    type Output = Self;
    #[inline]
    fn neg(self) -> Self {
        Self::new(-self.w, -self.x, -self.y, -self.z)
    }
}

/// Hamilton product.
impl Mul for Quaternion {
    type Output = Self;
    #[inline]
    fn mul(self, o: Self) -> Self {
        Self::new(
            self.w * o.w - self.x * o.x - self.y * o.y - self.z * o.z,
            self.w * o.x + self.x * o.w + self.y * o.z - self.z * o.y,
            self.w * o.y - self.x * o.z + self.y * o.w + self.z * o.x,
            self.w * o.z + self.x * o.y - self.y * o.x + self.z * o.w,
        )
    }
}

impl Mul<f64> for Quaternion {
    type Output = Self;
    #[inline]
    fn mul(self, s: f64) -> Self {
        self.scale(s)
    }
}

/// An element ξ of sp(1) ≅ Im(H); also reused as a coefficient triple in the
/// β-basis of self-dual 2-forms.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct ImQuaternion {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl ImQuaternion {
    pub const ZERO: Self = Self::new(0.0, 0.0, 0.0);

    #[inline]
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    #[inline]
    pub fn as_quat(self) -> Quaternion {
        Quaternion::new(0.0, self.x, self.y, self.z)
    }

    #[inline]
    pub fn dot(self, o: Self) -> f64 {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    #[inline]
    pub fn norm(self) -> f64 {
        self.dot(self).sqrt()
    }

    #[inline]
    pub fn scale(self, s: f64) -> Self {
        Self::new(self.x * s, self.y * s, self.z * s)
    }
}

impl Add for ImQuaternion {
    type Output = Self;
    #[inline]
    fn add(self, o: Self) -> Self {
        Self::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl Sub for ImQuaternion {
    type Output = Self;
    #[inline]
    fn sub(self, o: Self) -> Self {
        Self::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Neg for ImQuaternion {
    type Output = Self;
    #[inline]
    fn neg(self) -> Self {
        Self::new(-self.x, -self.y, -self.z)
    }
}

/// An element of the Z₂-graded Clifford module W⁺ ⊕ W⁻ with n quaternionic
/// factors per chirality.
#[derive(Clone, Debug, PartialEq)]
pub struct CliffordModuleElement {
    pub plus: Vec<Quaternion>,
    pub minus: Vec<Quaternion>,
}

impl CliffordModuleElement {
    pub fn new(plus: Vec<Quaternion>, minus: Vec<Quaternion>) -> Self {
        assert_eq!(plus.len(), minus.len(), "chirality ranks must match");
        Self { plus, minus }
    }

    pub fn zero(n: usize) -> Self {
        Self::new(vec![Quaternion::ZERO; n], vec![Quaternion::ZERO; n])
    }

    pub fn norm_sq(&self) -> f64 {
        self.plus.iter().map(|q| q.norm_sq()).sum::<f64>()
            + self.minus.iter().map(|q| q.norm_sq()).sum::<f64>()
    }
}

/// The product of two quaternions; exposed as a named operation next to the
/// operator impl for call sites that want the explicit name.
#[inline]
pub fn qmul(a: Quaternion, b: Quaternion) -> Quaternion {
    a * b
}

/// The complex-structure family: I_ξ(v) = v · conj(ξ), R-linear in both
/// arguments and an algebra antihomomorphism-free composition rule
/// I_h ∘ I_g = I_{hg}.
#[inline]
pub fn apply_complex_structure(xi: Quaternion, v: Quaternion) -> Quaternion {
    v * xi.conj()
}

/// Clifford multiplication of the covector identified with the quaternion h:
/// (plus, minus) ↦ (−I_{conj h}(minus), I_h(plus)), componentwise over the
/// quaternionic factors. h • h = −|h|² · id.
pub fn clifford_mul(h: Quaternion, s: &CliffordModuleElement) -> CliffordModuleElement {
    let plus = s
        .minus
        .iter()
        .map(|&m| -apply_complex_structure(h.conj(), m))
        .collect();
    let minus = s
        .plus
        .iter()
        .map(|&p| apply_complex_structure(h, p))
        .collect();
    CliffordModuleElement::new(plus, minus)
}

/// Quaternions of the oriented coordinate covectors (e⁰, e¹, e², e³).
pub const COVECTOR: [Quaternion; 4] = [
    Quaternion::ONE,
    Quaternion::new(0.0, -1.0, 0.0, 0.0),
    Quaternion::new(0.0, 0.0, -1.0, 0.0),
    Quaternion::new(0.0, 0.0, 0.0, -1.0),
];

/// Conjugates of [`COVECTOR`]: the right-multipliers (1, i, j, k) produced by
/// the W⁺ → W⁻ block of Clifford multiplication. Hot loops in the Dirac
/// operator use these directly.
pub const COVECTOR_CONJ: [Quaternion; 4] = [Quaternion::ONE, Quaternion::I, Quaternion::J, Quaternion::K];

/// Covector of the coordinate direction μ: (1, −i, −j, −k) for μ = 0..3.
pub fn covector_from_basis(mu: usize) -> Result<Quaternion, CoreError> {
    COVECTOR
        .get(mu)
        .copied()
        .ok_or(CoreError::DirectionOutOfRange(mu))
}
