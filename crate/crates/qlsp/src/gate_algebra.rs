//! 2×2 unitary arithmetic, gate classification, merging and CZ conjugation.

use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt;
use std::ops::Mul;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ir::Affine;

/// Entrywise tolerance used for classification and identity detection.
pub const TOL: f64 = 1e-9;

pub type C64 = Complex64;

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

#[derive(Debug, Error, PartialEq)]
pub enum AlgebraError {
    #[error("a general single-qubit gate cannot be conjugated through CZ")]
    GeneralThroughCz,
}

/// Row-major 2×2 complex matrix.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Mat2(pub [[C64; 2]; 2]);

impl Mat2 {
    pub const fn new(a: C64, b: C64, c: C64, d: C64) -> Self {
        Mat2([[a, b], [c, d]])
    }

    pub fn from_reals(a: f64, b: f64, c: f64, d: f64) -> Self {
        Mat2::new(C64::new(a, 0.0), C64::new(b, 0.0), C64::new(c, 0.0), C64::new(d, 0.0))
    }

    pub fn identity() -> Self {
        Mat2::new(ONE, ZERO, ZERO, ONE)
    }

    pub fn x() -> Self {
        Mat2::new(ZERO, ONE, ONE, ZERO)
    }

    pub fn y() -> Self {
        Mat2::new(ZERO, C64::new(0.0, -1.0), C64::new(0.0, 1.0), ZERO)
    }

    pub fn z() -> Self {
        Mat2::new(ONE, ZERO, ZERO, -ONE)
    }

    pub fn h() -> Self {
        Mat2::from_reals(FRAC_1_SQRT_2, FRAC_1_SQRT_2, FRAC_1_SQRT_2, -FRAC_1_SQRT_2)
    }

    pub fn s() -> Self {
        Mat2::new(ONE, ZERO, ZERO, C64::new(0.0, 1.0))
    }

    pub fn sdg() -> Self {
        Mat2::new(ONE, ZERO, ZERO, C64::new(0.0, -1.0))
    }

    pub fn t() -> Self {
        Mat2::new(ONE, ZERO, ZERO, C64::from_polar(1.0, std::f64::consts::FRAC_PI_4))
    }

    pub fn tdg() -> Self {
        Mat2::new(ONE, ZERO, ZERO, C64::from_polar(1.0, -std::f64::consts::FRAC_PI_4))
    }

    /// `R_Z(α) = diag(e^{-iα/2}, e^{iα/2})`.
    pub fn rz(alpha: f64) -> Self {
        Mat2::new(C64::from_polar(1.0, -alpha / 2.0), ZERO, ZERO, C64::from_polar(1.0, alpha / 2.0))
    }

    /// `R_Z^+(α) = X·R_Z(α)`.
    pub fn rz_plus(alpha: f64) -> Self {
        Mat2::new(ZERO, C64::from_polar(1.0, alpha / 2.0), C64::from_polar(1.0, -alpha / 2.0), ZERO)
    }

    /// General single-qubit rotation `U3(θ, φ, λ)`.
    pub fn u3(theta: f64, phi: f64, lambda: f64) -> Self {
        let (s, c) = (theta / 2.0).sin_cos();
        Mat2::new(
            C64::new(c, 0.0),
            -C64::from_polar(s, lambda),
            C64::from_polar(s, phi),
            C64::from_polar(c, phi + lambda),
        )
    }

    pub fn adjoint(&self) -> Self {
        let m = &self.0;
        Mat2::new(m[0][0].conj(), m[1][0].conj(), m[0][1].conj(), m[1][1].conj())
    }

    pub fn scale(&self, s: C64) -> Self {
        let m = &self.0;
        Mat2::new(m[0][0] * s, m[0][1] * s, m[1][0] * s, m[1][1] * s)
    }

    pub fn max_abs_diff(&self, other: &Mat2) -> f64 {
        let mut d = 0.0f64;
        for r in 0..2 {
            for c in 0..2 {
                d = d.max((self.0[r][c] - other.0[r][c]).norm());
            }
        }
        d
    }

    pub fn approx_eq(&self, other: &Mat2, tol: f64) -> bool {
        self.max_abs_diff(other) <= tol
    }

    /// Equality up to a global phase, aligned on the largest-magnitude entry.
    pub fn approx_eq_up_to_phase(&self, other: &Mat2, tol: f64) -> bool {
        let (mut br, mut bc, mut best) = (0, 0, -1.0);
        for r in 0..2 {
            for c in 0..2 {
                let v = other.0[r][c].norm();
                if v > best {
                    best = v;
                    br = r;
                    bc = c;
                }
            }
        }
        if best <= tol {
            return self.approx_eq(other, tol);
        }
        let a = self.0[br][bc];
        if a.norm() <= tol {
            return false;
        }
        let phase = a / other.0[br][bc];
        let phase = phase / phase.norm();
        self.approx_eq(&other.scale(phase), tol)
    }

    pub fn is_identity_up_to_phase(&self, tol: f64) -> bool {
        self.approx_eq_up_to_phase(&Mat2::identity(), tol)
    }

    pub fn is_unitary(&self, tol: f64) -> bool {
        (self.adjoint() * *self).approx_eq(&Mat2::identity(), tol)
    }

    pub fn classify(&self) -> GateClass {
        let m = &self.0;
        if m[0][1].norm() <= TOL && m[1][0].norm() <= TOL {
            GateClass::Diagonal
        } else if m[0][0].norm() <= TOL && m[1][1].norm() <= TOL {
            GateClass::AntiDiagonal
        } else {
            GateClass::General
        }
    }

    /// Name of the textbook gate equal to this matrix, if any.
    pub fn builtin_name(&self) -> Option<&'static str> {
        BUILTINS
            .iter()
            .find(|(_, f)| f().approx_eq(self, 1e-12))
            .map(|(n, _)| *n)
    }
}

impl Mul for Mat2 {
    type Output = Mat2;
    fn mul(self, rhs: Mat2) -> Mat2 {
        let a = &self.0;
        let b = &rhs.0;
        let mut out = [[ZERO; 2]; 2];
        for (r, row) in out.iter_mut().enumerate() {
            for (c, cell) in row.iter_mut().enumerate() {
                *cell = a[r][0] * b[0][c] + a[r][1] * b[1][c];
            }
        }
        Mat2(out)
    }
}

type Ctor = fn() -> Mat2;

/// Textbook gates usable by name in programs.
pub const BUILTINS: &[(&str, Ctor)] = &[
    ("I", Mat2::identity),
    ("X", Mat2::x),
    ("Y", Mat2::y),
    ("Z", Mat2::z),
    ("H", Mat2::h),
    ("S", Mat2::s),
    ("Sdg", Mat2::sdg),
    ("T", Mat2::t),
    ("Tdg", Mat2::tdg),
];

pub fn builtin(name: &str) -> Option<Mat2> {
    BUILTINS.iter().find(|(n, _)| *n == name).map(|(_, f)| f())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GateClass {
    Diagonal,
    AntiDiagonal,
    General,
}

/// Diagonality hint carried by symbolic gates.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Hint {
    Diagonal,
    AntiDiagonal,
    Unknown,
}

impl Hint {
    pub fn from_class(c: GateClass) -> Hint {
        match c {
            GateClass::Diagonal => Hint::Diagonal,
            GateClass::AntiDiagonal => Hint::AntiDiagonal,
            GateClass::General => Hint::Unknown,
        }
    }

    pub fn class(self) -> GateClass {
        match self {
            Hint::Diagonal => GateClass::Diagonal,
            Hint::AntiDiagonal => GateClass::AntiDiagonal,
            Hint::Unknown => GateClass::General,
        }
    }

    /// Group law of the diagonal / antidiagonal subgroup.
    pub fn compose(self, other: Hint) -> Hint {
        use Hint::*;
        match (self, other) {
            (Unknown, _) | (_, Unknown) => Unknown,
            (Diagonal, Diagonal) | (AntiDiagonal, AntiDiagonal) => Diagonal,
            _ => AntiDiagonal,
        }
    }
}

/// One factor of a symbolic product.
#[derive(Clone, Debug, PartialEq)]
pub enum Factor {
    Fixed(Mat2),
    /// Element `def[index]` of a gate array whose value is only known at run time
    /// (or varies with the iteration).
    Elem { def: usize, index: Affine, hint: Hint },
}

impl Factor {
    pub fn hint(&self) -> Hint {
        match self {
            Factor::Fixed(m) => Hint::from_class(m.classify()),
            Factor::Elem { hint, .. } => *hint,
        }
    }
}

/// A single-qubit gate.
#[derive(Clone, Debug, PartialEq)]
pub enum SqGate {
    Known(Mat2),
    /// Ordered product; `factors[0]` is applied first.
    Symbolic { factors: Vec<Factor>, hint: Hint },
}

impl SqGate {
    pub fn elem(def: usize, index: Affine, hint: Hint) -> SqGate {
        SqGate::Symbolic { factors: vec![Factor::Elem { def, index, hint }], hint }
    }

    pub fn classify(&self) -> GateClass {
        match self {
            SqGate::Known(m) => m.classify(),
            SqGate::Symbolic { hint, .. } => hint.class(),
        }
    }

    pub fn hint(&self) -> Hint {
        match self {
            SqGate::Known(m) => Hint::from_class(m.classify()),
            SqGate::Symbolic { hint, .. } => *hint,
        }
    }

    pub fn is_identity(&self) -> bool {
        matches!(self, SqGate::Known(m) if m.is_identity_up_to_phase(TOL))
    }

    fn factors(&self) -> Vec<Factor> {
        match self {
            SqGate::Known(m) => vec![Factor::Fixed(*m)],
            SqGate::Symbolic { factors, .. } => factors.clone(),
        }
    }

    /// Rewrites every iteration-dependent index `k·i+b` as `k·(α·i+β)+b`.
    pub fn subst(&self, alpha: i64, beta: i64) -> SqGate {
        match self {
            SqGate::Known(_) => self.clone(),
            SqGate::Symbolic { factors, hint } => SqGate::Symbolic {
                factors: factors
                    .iter()
                    .map(|f| match f {
                        Factor::Fixed(_) => f.clone(),
                        Factor::Elem { def, index, hint } => Factor::Elem {
                            def: *def,
                            index: index.subst(alpha, beta),
                            hint: *hint,
                        },
                    })
                    .collect(),
                hint: *hint,
            },
        }
    }

    pub fn approx_eq(&self, other: &SqGate, tol: f64) -> bool {
        match (self, other) {
            (SqGate::Known(a), SqGate::Known(b)) => a.approx_eq(b, tol),
            (SqGate::Symbolic { factors: fa, hint: ha }, SqGate::Symbolic { factors: fb, hint: hb }) => {
                ha == hb
                    && fa.len() == fb.len()
                    && fa.iter().zip(fb).all(|(x, y)| match (x, y) {
                        (Factor::Fixed(a), Factor::Fixed(b)) => a.approx_eq(b, tol),
                        _ => x == y,
                    })
            }
            _ => false,
        }
    }
}

/// Gate equal to applying `a` and then `b`, i.e. the product `b·a`.
pub fn merge(a: &SqGate, b: &SqGate) -> SqGate {
    match (a, b) {
        (SqGate::Known(ma), SqGate::Known(mb)) => SqGate::Known(*mb * *ma),
        _ => {
            let mut factors = a.factors();
            for f in b.factors() {
                match (factors.last_mut(), f) {
                    (Some(Factor::Fixed(prev)), Factor::Fixed(next)) => *prev = next * *prev,
                    (_, f) => factors.push(f),
                }
            }
            factors.retain(|f| !matches!(f, Factor::Fixed(m) if m.approx_eq(&Mat2::identity(), 1e-12)));
            let hint = factors.iter().fold(Hint::Diagonal, |h, f| h.compose(f.hint()));
            if factors.iter().all(|f| matches!(f, Factor::Fixed(_))) {
                let m = factors.iter().fold(Mat2::identity(), |acc, f| match f {
                    Factor::Fixed(m) => *m * acc,
                    Factor::Elem { .. } => acc,
                });
                return SqGate::Known(m);
            }
            SqGate::Symbolic { factors, hint }
        }
    }
}

/// Which operand of a CZ a gate acts on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Operand {
    A,
    B,
}

impl Operand {
    pub fn other(self) -> Operand {
        match self {
            Operand::A => Operand::B,
            Operand::B => Operand::A,
        }
    }
}

/// `CZ_xy` flips the sign of the basis state `|xy⟩`; `CZ_11` is the ordinary CZ.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CzVariant {
    pub x: u8,
    pub y: u8,
}

impl Default for CzVariant {
    fn default() -> Self {
        CzVariant::STANDARD
    }
}

impl CzVariant {
    pub const STANDARD: CzVariant = CzVariant { x: 1, y: 1 };

    pub fn new(x: u8, y: u8) -> Self {
        assert!(x <= 1 && y <= 1, "CZ variant bits must be 0 or 1");
        CzVariant { x, y }
    }

    pub fn is_standard(&self) -> bool {
        *self == CzVariant::STANDARD
    }

    pub fn toggled(self, side: Operand) -> CzVariant {
        match side {
            Operand::A => CzVariant { x: 1 - self.x, y: self.y },
            Operand::B => CzVariant { x: self.x, y: 1 - self.y },
        }
    }

    /// Diagonal of the variant in the basis `|00⟩, |01⟩, |10⟩, |11⟩` (operand A is the high bit).
    pub fn diagonal(&self) -> [f64; 4] {
        let mut d = [1.0; 4];
        d[(self.x as usize) << 1 | self.y as usize] = -1.0;
        d
    }
}

impl fmt::Display for CzVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "CZ_{}{}", self.x, self.y)
    }
}

/// Moves `g` (acting on `operand`) from one side of `cz` to the other.
///
/// `CZ_xy·(g on s) = (g on s)·CZ_x'y'`: diagonal gates leave the variant alone and
/// antidiagonal gates toggle the bit that belongs to their operand.
pub fn conjugate_through_cz(g: &SqGate, operand: Operand, cz: CzVariant) -> Result<(SqGate, CzVariant), AlgebraError> {
    match g.classify() {
        GateClass::Diagonal => Ok((g.clone(), cz)),
        GateClass::AntiDiagonal => Ok((g.clone(), cz.toggled(operand))),
        GateClass::General => Err(AlgebraError::GeneralThroughCz),
    }
}

/// Expresses a variant as Z corrections applied before a standard CZ, plus a global phase.
pub fn variant_to_standard(cz: CzVariant) -> (Vec<Operand>, i8) {
    match (cz.x, cz.y) {
        (1, 1) => (vec![], 1),
        (1, 0) => (vec![Operand::A], 1),
        (0, 1) => (vec![Operand::B], 1),
        _ => (vec![Operand::A, Operand::B], -1),
    }
}

/// Row-major 4×4 complex matrix on two qubits; operand A is the high bit.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Mat4(pub [[C64; 4]; 4]);

impl Mat4 {
    pub fn identity() -> Self {
        let mut m = [[ZERO; 4]; 4];
        for (i, row) in m.iter_mut().enumerate() {
            row[i] = ONE;
        }
        Mat4(m)
    }

    #[allow(clippy::needless_range_loop)]
    pub fn kron(a: &Mat2, b: &Mat2) -> Self {
        let mut m = [[ZERO; 4]; 4];
        for r in 0..4 {
            for c in 0..4 {
                m[r][c] = a.0[r >> 1][c >> 1] * b.0[r & 1][c & 1];
            }
        }
        Mat4(m)
    }

    pub fn on(operand: Operand, g: &Mat2) -> Self {
        match operand {
            Operand::A => Mat4::kron(g, &Mat2::identity()),
            Operand::B => Mat4::kron(&Mat2::identity(), g),
        }
    }

    pub fn cz(v: CzVariant) -> Self {
        let d = v.diagonal();
        let mut m = [[ZERO; 4]; 4];
        for (i, row) in m.iter_mut().enumerate() {
            row[i] = C64::new(d[i], 0.0);
        }
        Mat4(m)
    }

    pub fn scale(&self, s: C64) -> Self {
        let mut m = self.0;
        for row in m.iter_mut() {
            for v in row.iter_mut() {
                *v *= s;
            }
        }
        Mat4(m)
    }

    pub fn max_abs_diff(&self, other: &Mat4) -> f64 {
        let mut d = 0.0f64;
        for r in 0..4 {
            for c in 0..4 {
                d = d.max((self.0[r][c] - other.0[r][c]).norm());
            }
        }
        d
    }
}

impl Mul for Mat4 {
    type Output = Mat4;
    fn mul(self, rhs: Mat4) -> Mat4 {
        let mut out = [[ZERO; 4]; 4];
        for (r, row) in out.iter_mut().enumerate() {
            for (c, cell) in row.iter_mut().enumerate() {
                *cell = (0..4).map(|k| self.0[r][k] * rhs.0[k][c]).sum();
            }
        }
        Mat4(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn classify_textbook_gates() {
        assert_eq!(Mat2::rz(std::f64::consts::PI / 3.0).classify(), GateClass::Diagonal);
        assert_eq!(Mat2::x().classify(), GateClass::AntiDiagonal);
        assert_eq!(Mat2::rz_plus(0.0).classify(), GateClass::AntiDiagonal);
        assert_eq!(Mat2::h().classify(), GateClass::General);
        assert_eq!(SqGate::elem(0, Affine::new(1, 0), Hint::AntiDiagonal).classify(), GateClass::AntiDiagonal);
    }

    #[test]
    fn rz_plus_is_x_times_rz() {
        let a = 0.77;
        assert!(Mat2::rz_plus(a).approx_eq(&(Mat2::x() * Mat2::rz(a)), 1e-12));
    }

    #[test]
    fn merge_known() {
        let z = SqGate::Known(Mat2::z());
        assert!(merge(&z, &z).is_identity());
        let h = SqGate::Known(Mat2::h());
        let hz = merge(&h, &z);
        let hzh = merge(&hz, &h);
        match hzh {
            SqGate::Known(m) => assert!(m.approx_eq(&Mat2::x(), 1e-12)),
            _ => panic!("expected a known gate"),
        }
    }

    #[test]
    fn merge_symbolic_follows_group_law() {
        let a = SqGate::elem(0, Affine::new(1, 0), Hint::AntiDiagonal);
        let b = SqGate::elem(1, Affine::new(1, 1), Hint::AntiDiagonal);
        assert_eq!(merge(&a, &b).hint(), Hint::Diagonal);
        let d = SqGate::elem(2, Affine::new(0, 0), Hint::Diagonal);
        assert_eq!(merge(&a, &d).hint(), Hint::AntiDiagonal);
        let u = SqGate::elem(3, Affine::new(0, 0), Hint::Unknown);
        assert_eq!(merge(&d, &u).hint(), Hint::Unknown);
        let x = SqGate::Known(Mat2::x());
        assert_eq!(merge(&x, &a).hint(), Hint::Diagonal);
    }

    #[test]
    fn conjugation_examples() {
        let rz = SqGate::Known(Mat2::rz(0.4));
        assert_eq!(conjugate_through_cz(&rz, Operand::B, CzVariant::STANDARD).unwrap().1, CzVariant::new(1, 1));
        let rzp = SqGate::Known(Mat2::rz_plus(0.4));
        assert_eq!(conjugate_through_cz(&rzp, Operand::B, CzVariant::STANDARD).unwrap().1, CzVariant::new(1, 0));
        let x = SqGate::Known(Mat2::x());
        assert_eq!(conjugate_through_cz(&x, Operand::A, CzVariant::STANDARD).unwrap().1, CzVariant::new(0, 1));
        let h = SqGate::Known(Mat2::h());
        assert_eq!(conjugate_through_cz(&h, Operand::A, CzVariant::STANDARD), Err(AlgebraError::GeneralThroughCz));
    }

    #[test]
    fn variant_expansions() {
        assert_eq!(variant_to_standard(CzVariant::new(1, 1)), (vec![], 1));
        assert_eq!(variant_to_standard(CzVariant::new(0, 1)), (vec![Operand::B], 1));
        assert_eq!(variant_to_standard(CzVariant::new(0, 0)), (vec![Operand::A, Operand::B], -1));
    }

    #[test]
    fn x_through_cz_matches_4x4_product() {
        let lhs = Mat4::cz(CzVariant::STANDARD) * Mat4::on(Operand::A, &Mat2::x());
        let rhs = Mat4::on(Operand::A, &Mat2::x()) * Mat4::on(Operand::B, &Mat2::z()) * Mat4::cz(CzVariant::STANDARD);
        assert!(lhs.max_abs_diff(&rhs) < 1e-12);
    }

    #[test]
    fn builtins_are_unitary_and_named() {
        for (name, f) in BUILTINS {
            assert!(f().is_unitary(1e-12), "{name}");
            assert_eq!(f().builtin_name(), Some(*name));
        }
    }
}
