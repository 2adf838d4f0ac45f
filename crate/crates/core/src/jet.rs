//! Closed-form arithmetic of one-jets of bisections.
//!
//! The kernel of `J¹G → G` is modelled by linear maps `φ: T_mM → 𝔤|_m`
//! ([`KernelHom`]) with `φ^TM = id − #φ` invertible; [`vee`] embeds them as
//! jets over identity arrows. Every product below is a closed formula in the
//! tangent maps of the structure maps, and every one of them is checked
//! against the bisection oracle in the test suites.

use rand::Rng;

use crate::calculus::{jacobian_of, Matrix, Vector, DET_THRESHOLD, FD_STEP};
use crate::connection::CartanConnection;
use crate::error::{Error, Result};
use crate::groupoid::{
    inversion_jacobian, left_translation_jacobian, oracle_jet, right_translation_jacobian, sample_arrow, sample_composable,
    target_jacobian, vertical_basis, AlgebroidVec, Arrow, GroupoidModel, Jet1, COMPOSABLE_TOL,
};

/// `φ ∈ T*_mM ⊗ 𝔤|_m`, stored as an `N × n` matrix whose columns are
/// source-vertical vectors at `unit(m)`.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelHom {
    pub m: Vector,
    pub phi: Matrix,
}

impl KernelHom {
    pub fn new(m: Vector, phi: Matrix) -> Self {
        Self { m, phi }
    }

    pub fn zero(model: &dyn GroupoidModel, m: &Vector) -> Self {
        Self { m: m.clone(), phi: Matrix::zeros(model.dim(), model.base_dim()) }
    }

    /// `#∘φ`, an `n × n` matrix.
    pub fn anchored(&self, model: &dyn GroupoidModel) -> Matrix {
        target_jacobian(model, &model.unit(&self.m)) * &self.phi
    }

    /// `φ^TM = id − #∘φ`.
    pub fn tm_part(&self, model: &dyn GroupoidModel) -> Matrix {
        let n = model.base_dim();
        Matrix::identity(n, n) - self.anchored(model)
    }

    /// `φ^𝔤 X = X − φ(#X)`.
    pub fn g_part(&self, model: &dyn GroupoidModel, x: &Vector) -> Vector {
        let anchor = target_jacobian(model, &model.unit(&self.m)) * x;
        x - &self.phi * anchor
    }

    pub fn is_invertible(&self, model: &dyn GroupoidModel) -> bool {
        self.tm_part(model).determinant().abs() > DET_THRESHOLD
    }

    pub fn distance(&self, other: &KernelHom) -> f64 {
        (&self.phi - &other.phi).amax().max((&self.m - &other.m).amax())
    }
}

fn same_base(a: &Vector, b: &Vector, what: &str) -> Result<()> {
    let gap = (a - b).amax();
    if gap > COMPOSABLE_TOL {
        Err(Error::BaseMismatch(format!("{what}: gap {gap:e}")))
    } else {
        Ok(())
    }
}

fn invert(a: &Matrix, what: &str) -> Result<Matrix> {
    if a.determinant().abs() <= DET_THRESHOLD {
        return Err(Error::Singular(what.to_string()));
    }
    a.clone().try_inverse().ok_or_else(|| Error::Singular(what.to_string()))
}

/// `ψφ = ψ + φ − ψ∘#∘φ`.
pub fn aut_mul(model: &dyn GroupoidModel, psi: &KernelHom, phi: &KernelHom) -> Result<KernelHom> {
    same_base(&psi.m, &phi.m, "kernel product")?;
    let phi_anchor = phi.anchored(model);
    Ok(KernelHom { m: phi.m.clone(), phi: &psi.phi + &phi.phi - &psi.phi * phi_anchor })
}

/// `φ ↦ −φ∘(φ^TM)⁻¹`.
pub fn aut_inv(model: &dyn GroupoidModel, phi: &KernelHom) -> Result<KernelHom> {
    let inv = invert(&phi.tm_part(model), "kernel element is not invertible")?;
    Ok(KernelHom { m: phi.m.clone(), phi: -(&phi.phi * inv) })
}

/// The jet `φ̌: v ↦ v − φv` over the identity arrow at the base of `φ`.
pub fn vee(model: &dyn GroupoidModel, phi: &KernelHom) -> Result<Jet1> {
    if !phi.is_invertible(model) {
        return Err(Error::Singular("φ^TM is singular".into()));
    }
    let tunit = jacobian_of(|x| model.unit(x), &phi.m, FD_STEP);
    Ok(Jet1 { arrow: Arrow::unit(model, &phi.m), mu: tunit - &phi.phi })
}

/// `v ↦ Tβ·μ(v)`.
pub fn adjoint_tangent(model: &dyn GroupoidModel, mu: &Jet1, v: &Vector) -> Vector {
    mu.ad_tangent_matrix(model) * v
}

/// Matrix of `X ↦ TR_{g⁻¹}·(μ(#X) − TL_g·TI·X)` on source-vertical vectors
/// at `unit(α(g))`.
pub fn adjoint_algebroid_matrix(model: &dyn GroupoidModel, mu: &Jet1) -> Matrix {
    let g = &mu.arrow.coords;
    let u = model.unit(&mu.arrow.source);
    let anchor = target_jacobian(model, &u);
    let ti = inversion_jacobian(model, &u);
    let tl = left_translation_jacobian(model, g, &u);
    let tr = right_translation_jacobian(model, &model.inv(g), g);
    tr * (&mu.mu * anchor - tl * ti)
}

pub fn adjoint_algebroid(model: &dyn GroupoidModel, mu: &Jet1, x: &AlgebroidVec) -> Result<AlgebroidVec> {
    same_base(&x.base, &mu.arrow.source, "adjoint on the algebroid")?;
    Ok(AlgebroidVec { base: mu.arrow.target.clone(), vec: adjoint_algebroid_matrix(model, mu) * &x.vec })
}

/// `(Ad_μφ)v = Ad_μ(φ(Ad_μ⁻¹v))`, a kernel element at the target of `μ`.
pub fn adjoint_kernel(model: &dyn GroupoidModel, mu: &Jet1, phi: &KernelHom) -> Result<KernelHom> {
    same_base(&phi.m, &mu.arrow.source, "adjoint on kernel elements")?;
    let a_inv = invert(&mu.ad_tangent_matrix(model), "Ad on TM is singular")?;
    let ad = adjoint_algebroid_matrix(model, mu);
    Ok(KernelHom { m: mu.arrow.target.clone(), phi: ad * &phi.phi * a_inv })
}

/// Argument of the general adjoint action.
#[derive(Debug, Clone, PartialEq)]
pub enum AdjointArg {
    Tangent { base: Vector, v: Vector },
    Algebroid(AlgebroidVec),
    Kernel(KernelHom),
}

/// The adjoint action of `μ` on tangent vectors, algebroid vectors, or kernel
/// elements at its source.
pub fn adjoint(model: &dyn GroupoidModel, mu: &Jet1, x: &AdjointArg) -> Result<AdjointArg> {
    match x {
        AdjointArg::Tangent { base, v } => {
            same_base(base, &mu.arrow.source, "adjoint on TM")?;
            Ok(AdjointArg::Tangent { base: mu.arrow.target.clone(), v: adjoint_tangent(model, mu, v) })
        }
        AdjointArg::Algebroid(a) => adjoint_algebroid(model, mu, a).map(AdjointArg::Algebroid),
        AdjointArg::Kernel(phi) => adjoint_kernel(model, mu, phi).map(AdjointArg::Kernel),
    }
}

/// `μ⁻¹(v) = TI·μ(Ad_μ⁻¹v)`, a jet over `g⁻¹`.
pub fn jet_invert(model: &dyn GroupoidModel, mu: &Jet1) -> Result<Jet1> {
    let a_inv = invert(&mu.ad_tangent_matrix(model), "Ad on TM is singular")?;
    let ti = inversion_jacobian(model, &mu.arrow.coords);
    let g_inv = model.inv(&mu.arrow.coords);
    Ok(Jet1 { arrow: Arrow::new(model, g_inv), mu: ti * &mu.mu * a_inv })
}

/// `μφ̌(v) = μ(φ^TM v) + TL_g·TI·(φv)`, with `φ` based at the source of `μ`.
pub fn mul_kernel_right(model: &dyn GroupoidModel, mu: &Jet1, phi: &KernelHom) -> Result<Jet1> {
    same_base(&phi.m, &mu.arrow.source, "right kernel product")?;
    if !phi.is_invertible(model) {
        return Err(Error::Singular("φ^TM is singular".into()));
    }
    let u = model.unit(&phi.m);
    let tl = left_translation_jacobian(model, &mu.arrow.coords, &u);
    let ti = inversion_jacobian(model, &u);
    let nu = &mu.mu * phi.tm_part(model) + tl * ti * &phi.phi;
    Ok(Jet1 { arrow: mu.arrow.clone(), mu: nu })
}

/// `φ̌μ(v) = μ(v) − TR_g·φ(Ad_μ v)`, with `φ` based at the target of `μ`.
pub fn mul_kernel_left(model: &dyn GroupoidModel, phi: &KernelHom, mu: &Jet1) -> Result<Jet1> {
    same_base(&phi.m, &mu.arrow.target, "left kernel product")?;
    if !phi.is_invertible(model) {
        return Err(Error::Singular("φ^TM is singular".into()));
    }
    let u = model.unit(&phi.m);
    let tr = right_translation_jacobian(model, &mu.arrow.coords, &u);
    let nu = &mu.mu - tr * &phi.phi * mu.ad_tangent_matrix(model);
    Ok(Jet1 { arrow: mu.arrow.clone(), mu: nu })
}

/// `ψ` with `νμ⁻¹ = ψ̌` for two jets over the same arrow:
/// `ψv = TR_{g⁻¹}·(μ(Ad_μ⁻¹v) − ν(Ad_μ⁻¹v))`.
pub fn kernel_quotient(model: &dyn GroupoidModel, nu: &Jet1, mu: &Jet1) -> Result<KernelHom> {
    let gap = (&nu.arrow.coords - &mu.arrow.coords).amax();
    if gap > COMPOSABLE_TOL {
        return Err(Error::BaseMismatch(format!("jets over different arrows: gap {gap:e}")));
    }
    let a_inv = invert(&mu.ad_tangent_matrix(model), "Ad on TM is singular")?;
    let g = &mu.arrow.coords;
    let tr = right_translation_jacobian(model, &model.inv(g), g);
    Ok(KernelHom { m: mu.arrow.target.clone(), phi: tr * (&mu.mu - &nu.mu) * a_inv })
}

/// Splits `ν = φ̌·S(g)` into its arrow and kernel part.
pub fn jet_decompose(model: &dyn GroupoidModel, nu: &Jet1, s: &CartanConnection) -> Result<(Arrow, KernelHom)> {
    let mu = s.eval(&nu.arrow);
    let psi = kernel_quotient(model, nu, &mu)?;
    Ok((nu.arrow.clone(), psi))
}

/// Reassembles `c(g, φ) = φ̌·S(g)` as `S(g)·(Ad_{S(g)⁻¹}φ)^∨`.
pub fn jet_assemble(model: &dyn GroupoidModel, g: &Arrow, phi: &KernelHom, s: &CartanConnection) -> Result<Jet1> {
    let sg = s.eval(g);
    let sg_inv = jet_invert(model, &sg)?;
    let pulled = adjoint_kernel(model, &sg_inv, phi)?;
    mul_kernel_right(model, &sg, &pulled)
}

/// Product of jets through the semidirect structure determined by `S`:
/// `(g₁,φ₁)(g₂,φ₂) = (g₁g₂, φ₁·Ad_{S(g₁)}φ₂)`. Requires `S` to be verified
/// multiplicative.
pub fn jet_mul(model: &dyn GroupoidModel, mu1: &Jet1, mu2: &Jet1, s: &CartanConnection) -> Result<Jet1> {
    if !s.is_verified() {
        return Err(Error::NotMultiplicative(
            "closed-form products need a connection verified to be multiplicative".into(),
        ));
    }
    let gap = (&mu2.arrow.target - &mu1.arrow.source).amax();
    if gap > COMPOSABLE_TOL {
        return Err(Error::Composition(format!("jet product: gap {gap:e}")));
    }
    let (g1, phi1) = jet_decompose(model, mu1, s)?;
    let (g2, phi2) = jet_decompose(model, mu2, s)?;
    let moved = adjoint_kernel(model, &s.eval(&g1), &phi2)?;
    let phi = aut_mul(model, &phi1, &moved)?;
    let g = Arrow::new(model, model.mul(&g1.coords, &g2.coords));
    jet_assemble(model, &g, &phi, s)
}

/// Value at `m` of the bisection `a(b, Φ)` of `J¹G`: `Φ(m')^∨·T_m b` with
/// `m' = β(b(m))`.
pub fn assemble_bisection(
    model: &dyn GroupoidModel,
    b: &dyn Fn(&Vector) -> Vector,
    big_phi: &dyn Fn(&Vector) -> KernelHom,
    m: &Vector,
) -> Result<Jet1> {
    let tb = oracle_jet(model, b, m)?;
    let phi = big_phi(&tb.arrow.target);
    mul_kernel_left(model, &phi, &tb)
}

/// `(b·Φ)(m') = Ad_{T_m b}Φ(m)` where `m' = β(b(m))`, evaluated from `m`.
pub fn act_on_kernel_section(
    model: &dyn GroupoidModel,
    b: &dyn Fn(&Vector) -> Vector,
    big_phi: &dyn Fn(&Vector) -> KernelHom,
    m: &Vector,
) -> Result<KernelHom> {
    let tb = oracle_jet(model, b, m)?;
    adjoint_kernel(model, &tb, &big_phi(m))
}

/// Random kernel element at `m` with entries of size up to `spread` in the
/// vertical frame, redrawn until `φ^TM` is comfortably invertible.
pub fn sample_kernel<R: Rng + ?Sized>(model: &dyn GroupoidModel, m: &Vector, spread: f64, rng: &mut R) -> Result<KernelHom> {
    let basis = vertical_basis(model, &model.unit(m));
    for _ in 0..100 {
        let coeffs = Matrix::from_fn(basis.ncols(), model.base_dim(), |_, _| rng.random_range(-spread..spread));
        let phi = KernelHom::new(m.clone(), &basis * coeffs);
        if phi.tm_part(model).determinant().abs() > 0.1 {
            return Ok(phi);
        }
    }
    Err(Error::Sampling("no invertible kernel element".into()))
}

/// Random jet over a random arrow: `S(g)` moved off the connection by a
/// vertical perturbation of size up to `spread`.
pub fn sample_jet<R: Rng + ?Sized>(model: &dyn GroupoidModel, s: &CartanConnection, spread: f64, rng: &mut R) -> Result<Jet1> {
    for _ in 0..100 {
        let g = sample_arrow(model, rng)?;
        let basis = vertical_basis(model, &g.coords);
        let coeffs = Matrix::from_fn(basis.ncols(), model.base_dim(), |_, _| rng.random_range(-spread..spread));
        let mu = s.matrix(&g.coords) + &basis * coeffs;
        let jet = Jet1 { arrow: g, mu };
        if jet.validate(model).is_ok() && jet.ad_tangent_matrix(model).determinant().abs() > 0.1 {
            return Ok(jet);
        }
    }
    Err(Error::Sampling(format!("no admissible jet for {}", model.name())))
}

/// A composable pair `(μ₁, μ₂)` of random jets, each a vertical perturbation
/// of `S` of size up to `spread`.
pub fn sample_composable_jets<R: Rng + ?Sized>(
    model: &dyn GroupoidModel,
    s: &CartanConnection,
    spread: f64,
    rng: &mut R,
) -> Result<(Jet1, Jet1)> {
    for _ in 0..200 {
        let mu2 = sample_jet(model, s, spread, rng)?;
        let Ok(g1) = sample_composable(model, rng, &mu2.arrow) else { continue };
        let basis = vertical_basis(model, &g1.coords);
        let coeffs = Matrix::from_fn(basis.ncols(), model.base_dim(), |_, _| rng.random_range(-spread..spread));
        let mu1 = Jet1 { mu: s.matrix(&g1.coords) + &basis * coeffs, arrow: g1 };
        if mu1.validate(model).is_ok() && mu1.ad_tangent_matrix(model).determinant().abs() > 0.1 {
            return Ok((mu1, mu2));
        }
    }
    Err(Error::Sampling(format!("no composable jets for {}", model.name())))
}
