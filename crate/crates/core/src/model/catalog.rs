use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg::{
    check_dim, eigenspaces, eigh, random_hermitian, same_dim, spectrum, unitary_exp, HermitianOperator,
    OrthonormalBasis, C64,
};
use crate::model::basis::{is_totally_incompatible, matched_distance, COMMUTATION_TOL};
use crate::stats::RngKey;

/// Operators within this entrywise distance of `c·I` resolve to scalars.
pub const SCALAR_TOL: f64 = 1e-10;
pub const DEFAULT_EPSILON: f64 = 1e-3;
/// Perturbation attempts before a mint gives up.
pub const MAX_MINT_ATTEMPTS: usize = 32;

const MINT_DOMAIN: u64 = 0x4d49_4e54;
const REFINE_DOMAIN: u64 = 0x5246_494e;

/// Coefficients used to fold a commuting family into one operator whose
/// eigenbasis is the family's joint eigenbasis.
const CONTEXT_WEIGHTS: [f64; 9] = [
    1.0,
    std::f64::consts::PI / 7.0,
    std::f64::consts::E / 13.0,
    std::f64::consts::SQRT_2 / 17.0,
    1.732_050_807_568_877_2 / 19.0,
    2.236_067_977_499_79 / 23.0,
    std::f64::consts::LN_2 / 29.0,
    std::f64::consts::LN_10 / 31.0,
    std::f64::consts::FRAC_1_SQRT_2 / 37.0,
];

/// An element of the observable set: a multiple of the identity, or an element
/// `sum_i a_i P_{e_{k,i}}` of one catalog basis' algebra.
#[derive(Clone, Debug, PartialEq)]
pub enum ObservableHandle {
    Scalar(f64),
    InBasis { basis: usize, eigenvalues: Vec<f64> },
}

impl ObservableHandle {
    /// The handle of `g(A)`: the same basis with `g` applied to each
    /// eigenvalue.
    pub fn map(&self, g: impl Fn(f64) -> f64) -> Self {
        match self {
            Self::Scalar(c) => Self::Scalar(g(*c)),
            Self::InBasis { basis, eigenvalues } => {
                Self::InBasis { basis: *basis, eigenvalues: eigenvalues.iter().map(|&a| g(a)).collect() }
            }
        }
    }

    pub fn basis_index(&self) -> Option<usize> {
        match self {
            Self::Scalar(_) => None,
            Self::InBasis { basis, .. } => Some(*basis),
        }
    }

    /// The operator this handle stands for.
    pub fn operator(&self, catalog: &BasisCatalog) -> Result<HermitianOperator> {
        catalog.validate(self)?;
        match self {
            Self::Scalar(c) => Ok(HermitianOperator::identity(catalog.dim())?.scale(*c)),
            Self::InBasis { basis, eigenvalues } => Ok(catalog.bases[*basis].operator(eigenvalues)),
        }
    }

    /// Distinct values the handle can take.
    pub fn spectrum(&self) -> Vec<f64> {
        match self {
            Self::Scalar(c) => vec![*c],
            Self::InBasis { eigenvalues, .. } => {
                let mut v = eigenvalues.clone();
                v.sort_by(f64::total_cmp);
                v.dedup();
                v
            }
        }
    }
}

/// A commuting family resolved onto a single catalog basis. `targets[t]` is
/// the handle for the `t`-th member, carrying that member's exact eigenvalue on
/// each joint eigenvector.
#[derive(Clone, Debug, PartialEq)]
pub struct ContextHandle {
    pub basis: usize,
    pub targets: Vec<ObservableHandle>,
}

/// A finite, append-only set of pairwise totally incompatible bases.
///
/// Bases are minted on demand: a requested eigenbasis with no catalog basis
/// within `epsilon` gets a fresh basis perturbed from it by at most
/// `epsilon / 10`.
#[derive(Clone, Debug)]
pub struct BasisCatalog {
    dim: usize,
    epsilon: f64,
    seed: u64,
    bases: Vec<OrthonormalBasis>,
    refiner: DMatrix<C64>,
}

/// Creates an empty catalog.
pub fn new_catalog(dim: usize, epsilon: f64, seed: u64) -> Result<BasisCatalog> {
    BasisCatalog::new(dim, epsilon, seed)
}

impl BasisCatalog {
    pub fn new(dim: usize, epsilon: f64, seed: u64) -> Result<Self> {
        check_dim(dim)?;
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(Error::Domain(format!("epsilon must be positive and finite, got {epsilon}")));
        }
        let mut rng = RngKey::new(seed, [REFINE_DOMAIN, 0, 0, 0]).rng();
        let refiner = random_hermitian(&mut rng, dim).inner().clone();
        Ok(Self { dim, epsilon, seed, bases: Vec::new(), refiner })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    /// Radius of the perturbation applied when minting.
    pub fn delta(&self) -> f64 {
        self.epsilon / 10.0
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn len(&self) -> usize {
        self.bases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bases.is_empty()
    }

    pub fn basis(&self, k: usize) -> Option<&OrthonormalBasis> {
        self.bases.get(k)
    }

    pub fn bases(&self) -> &[OrthonormalBasis] {
        &self.bases
    }

    pub(crate) fn validate(&self, handle: &ObservableHandle) -> Result<()> {
        match handle {
            ObservableHandle::Scalar(c) if c.is_finite() => Ok(()),
            ObservableHandle::Scalar(c) => Err(Error::Domain(format!("scalar handle value {c} is not finite"))),
            ObservableHandle::InBasis { basis, eigenvalues } => {
                if *basis >= self.bases.len() {
                    return Err(Error::Domain(format!(
                        "handle refers to basis {basis} but the catalog holds {}",
                        self.bases.len()
                    )));
                }
                if eigenvalues.len() != self.dim {
                    return Err(Error::Domain(format!(
                        "handle has {} eigenvalues for dimension {}",
                        eigenvalues.len(),
                        self.dim
                    )));
                }
                Ok(())
            }
        }
    }

    /// Checks every pair of catalog bases for total incompatibility.
    pub fn is_pairwise_incompatible(&self) -> Result<bool> {
        for (i, a) in self.bases.iter().enumerate() {
            for b in &self.bases[..i] {
                if !is_totally_incompatible(a, b)? {
                    return Ok(false);
                }
            }
        }
        Ok(true)
    }

    /// Resolves a (pseudo) observable to the catalog observable an apparatus
    /// aimed at it actually measures.
    ///
    /// Scalars resolve to [`ObservableHandle::Scalar`]. Otherwise the target's
    /// eigenbasis (degenerate eigenspaces refined deterministically) is matched
    /// against the catalog; the closest basis within `epsilon` is reused, or a
    /// new one is minted. The returned handle carries the target's exact
    /// eigenvalues.
    pub fn resolve_target(&mut self, target: &HermitianOperator) -> Result<ObservableHandle> {
        same_dim(self.dim, target.dim())?;
        if let Some(c) = target.as_scalar(SCALAR_TOL) {
            return Ok(ObservableHandle::Scalar(c));
        }
        let (basis, eigenvalues) = self.refined_eigenbasis(target)?;
        let (k, matching) = self.resolve_basis(&basis)?;
        Ok(ObservableHandle::InBasis { basis: k, eigenvalues: permute_values(&eigenvalues, &matching) })
    }

    /// Resolves a commuting family to one catalog basis close to its joint
    /// eigenbasis.
    pub fn resolve_context(&mut self, targets: &[HermitianOperator]) -> Result<ContextHandle> {
        if targets.is_empty() || targets.len() > CONTEXT_WEIGHTS.len() {
            return Err(Error::Domain(format!(
                "a context needs between 1 and {} operators, got {}",
                CONTEXT_WEIGHTS.len(),
                targets.len()
            )));
        }
        for t in targets {
            same_dim(self.dim, t.dim())?;
        }
        for (i, a) in targets.iter().enumerate() {
            for b in &targets[..i] {
                let norm = a.commutator_norm(b)?;
                if norm > COMMUTATION_TOL {
                    return Err(Error::Domain(format!("context operators do not commute (||[A,B]|| = {norm:e})")));
                }
            }
        }
        let mut combined = targets[0].clone();
        for (t, w) in targets.iter().zip(CONTEXT_WEIGHTS).skip(1) {
            combined = combined.add(&t.scale(w))?;
        }
        let (basis, _) = self.refined_eigenbasis(&combined)?;
        let (k, matching) = self.resolve_basis(&basis)?;
        let handles = targets
            .iter()
            .map(|t| {
                let values = eigenvalues_on(t, &basis);
                ObservableHandle::InBasis { basis: k, eigenvalues: permute_values(&values, &matching) }
            })
            .collect();
        Ok(ContextHandle { basis: k, targets: handles })
    }

    /// Eigenbasis of `op` with each degenerate eigenspace split by the
    /// catalog's fixed random Hermitian operator, and the eigenvalue of each
    /// basis vector.
    fn refined_eigenbasis(&self, op: &HermitianOperator) -> Result<(OrthonormalBasis, Vec<f64>)> {
        let mut columns = DMatrix::zeros(self.dim, self.dim);
        let mut values = Vec::with_capacity(self.dim);
        let mut col = 0;
        for space in eigenspaces(op) {
            let m = space.vectors.ncols();
            let vectors = if m == 1 {
                space.vectors
            } else {
                let restricted = space.vectors.adjoint() * &self.refiner * &space.vectors;
                let (_, rotation) = eigh(&restricted);
                &space.vectors * rotation
            };
            columns.columns_mut(col, m).copy_from(&vectors);
            values.extend(std::iter::repeat_n(space.eigenvalue, m));
            col += m;
        }
        Ok((OrthonormalBasis::from_columns(columns)?, values))
    }

    /// Finds or mints the catalog basis for a requested eigenbasis. Returns
    /// its index and the matching from requested vectors to catalog vectors.
    fn resolve_basis(&mut self, requested: &OrthonormalBasis) -> Result<(usize, Vec<usize>)> {
        let mut best: Option<(f64, usize, Vec<usize>)> = None;
        for (k, b) in self.bases.iter().enumerate() {
            let (d, matching) = matched_distance(requested, b)?;
            if d < self.epsilon && best.as_ref().is_none_or(|(bd, _, _)| d < *bd) {
                best = Some((d, k, matching));
            }
        }
        if let Some((_, k, matching)) = best {
            return Ok((k, matching));
        }
        let k = self.mint(requested)?;
        Ok((k, (0..self.dim).collect()))
    }

    /// Appends a basis within `delta` of `requested`, index-aligned with it.
    fn mint(&mut self, requested: &OrthonormalBasis) -> Result<usize> {
        let index = self.bases.len();
        let delta = self.delta();
        'attempt: for attempt in 0..MAX_MINT_ATTEMPTS {
            let mut rng = RngKey::new(self.seed, [MINT_DOMAIN, index as u64, attempt as u64, 0]).rng();
            let h = random_hermitian(&mut rng, self.dim);
            let norm = h.matrix().operator_norm();
            if norm == 0.0 {
                continue;
            }
            // ||exp(itH) v - v|| <= t ||H||, which bounds each projector shift.
            let u = unitary_exp(&h.scale(1.0 / norm), delta);
            let candidate = match OrthonormalBasis::from_columns(u * requested.columns()) {
                Ok(b) => b,
                Err(_) => continue,
            };
            let (d, _) = matched_distance(requested, &candidate)?;
            if d > delta {
                continue;
            }
            for existing in &self.bases {
                if !is_totally_incompatible(existing, &candidate)? {
                    continue 'attempt;
                }
            }
            self.bases.push(candidate);
            return Ok(index);
        }
        Err(Error::CatalogSaturated { attempts: MAX_MINT_ATTEMPTS })
    }
}

/// `out[matching[i]] = values[i]`.
fn permute_values(values: &[f64], matching: &[usize]) -> Vec<f64> {
    let mut out = vec![0.0; values.len()];
    for (i, &j) in matching.iter().enumerate() {
        out[j] = values[i];
    }
    out
}

/// The eigenvalue of `op` on each column of `basis`, each column being an
/// eigenvector. Rayleigh quotients are snapped onto the exact spectrum.
fn eigenvalues_on(op: &HermitianOperator, basis: &OrthonormalBasis) -> Vec<f64> {
    let spec = spectrum(op);
    (0..basis.dim())
        .map(|i| {
            let v = basis.vector(i);
            let q = (v.adjoint() * op.inner() * &v)[(0, 0)].re;
            spec.iter()
                .copied()
                .min_by(|a, b| (a - q).abs().total_cmp(&(b - q).abs()))
                .expect("spectrum is never empty")
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{pauli, random_hermitian, spin1_component, tensor, Pauli};
    use crate::model::basis::basis_distance;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn new_catalog_is_empty() {
        let cat = new_catalog(3, 1e-3, 42).unwrap();
        assert!(cat.is_empty());
        assert!(matches!(new_catalog(1, 1e-3, 0), Err(Error::UnsupportedDimension(1))));
        assert!(matches!(new_catalog(10, 1e-3, 0), Err(Error::UnsupportedDimension(10))));
        assert!(new_catalog(3, 0.0, 0).is_err());
        assert!(new_catalog(3, f64::NAN, 0).is_err());
    }

    #[test]
    fn scalar_targets_resolve_to_scalars() {
        let mut cat = new_catalog(2, 1e-3, 1).unwrap();
        let t = HermitianOperator::identity(2).unwrap().scale(2.5);
        assert_eq!(cat.resolve_target(&t).unwrap(), ObservableHandle::Scalar(2.5));
        assert!(cat.is_empty());
    }

    #[test]
    fn sigma_z_mints_near_the_computational_basis() {
        let mut cat = new_catalog(2, 1e-3, 7).unwrap();
        let h = cat.resolve_target(&pauli(Pauli::Z)).unwrap();
        assert_eq!(h, ObservableHandle::InBasis { basis: 0, eigenvalues: vec![-1.0, 1.0] });
        let d = basis_distance(cat.basis(0).unwrap(), &OrthonormalBasis::computational(2).unwrap()).unwrap();
        assert!(d <= 1e-4, "{d}");
        assert!(d > 0.0);
        let again = cat.resolve_target(&pauli(Pauli::Z)).unwrap();
        assert_eq!(h, again);
        assert_eq!(cat.len(), 1);
    }

    #[test]
    fn resolved_operator_is_close_to_target() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut cat = new_catalog(3, 1e-3, 3).unwrap();
        for _ in 0..10 {
            let a = random_hermitian(&mut rng, 3);
            let h = cat.resolve_target(&a).unwrap();
            let op = h.operator(&cat).unwrap();
            assert_eq!(spectrum(&op).len(), 3);
            // Exact eigenvalues carried over.
            let mut want = spectrum(&a);
            let mut got = h.spectrum();
            want.sort_by(f64::total_cmp);
            got.sort_by(f64::total_cmp);
            assert_eq!(want, got);
            let scale = a.matrix().operator_norm();
            assert!(op.matrix().max_abs_diff(a.matrix()) < 4.0 * cat.delta() * scale.max(1.0));
        }
    }

    #[test]
    fn degenerate_targets_resolve_deterministically() {
        let q = spin1_component([1.0, 0.0, 0.0])
            .unwrap()
            .square()
            .scale(2.0)
            .add(&HermitianOperator::identity(3).unwrap().scale(-1.0))
            .unwrap();
        let mut a = new_catalog(3, 1e-3, 11).unwrap();
        let mut b = new_catalog(3, 1e-3, 11).unwrap();
        let ha = a.resolve_target(&q).unwrap();
        let hb = b.resolve_target(&q).unwrap();
        assert_eq!(ha, hb);
        assert_eq!(a.basis(0), b.basis(0));
        assert_eq!(a.resolve_target(&q).unwrap(), ha);
        assert_eq!(a.len(), 1);
        assert_eq!(ha.spectrum(), vec![-1.0, 1.0]);
    }

    #[test]
    fn catalog_stays_incompatible_over_long_sessions() {
        for dim in [3, 4] {
            let mut rng = ChaCha8Rng::seed_from_u64(dim as u64);
            let mut cat = new_catalog(dim, 1e-3, 99).unwrap();
            for _ in 0..50 {
                cat.resolve_target(&random_hermitian(&mut rng, dim)).unwrap();
            }
            assert_eq!(cat.len(), 50);
            assert!(cat.is_pairwise_incompatible().unwrap());
        }
    }

    #[test]
    fn nearby_targets_share_a_basis() {
        let mut cat = new_catalog(2, 1e-3, 5).unwrap();
        let z = pauli(Pauli::Z);
        let tilted = z.add(&pauli(Pauli::X).scale(1e-5)).unwrap();
        let h1 = cat.resolve_target(&z).unwrap();
        let h2 = cat.resolve_target(&tilted).unwrap();
        assert_eq!(h1.basis_index(), h2.basis_index());
        assert_eq!(cat.len(), 1);
    }

    #[test]
    fn context_resolution_requires_commuting_targets() {
        let mut cat = new_catalog(2, 1e-3, 0).unwrap();
        let err = cat.resolve_context(&[pauli(Pauli::X), pauli(Pauli::Z)]).unwrap_err();
        assert!(matches!(err, Error::Domain(_)));
        assert!(cat.resolve_context(&[]).is_err());
    }

    #[test]
    fn context_values_respect_the_product_identity() {
        let id = HermitianOperator::identity(2).unwrap();
        let (x, y) = (pauli(Pauli::X), pauli(Pauli::Y));
        let row = [tensor(&x, &id).unwrap(), tensor(&id, &x).unwrap(), tensor(&x, &x).unwrap()];
        let col =
            [tensor(&x, &x).unwrap(), tensor(&y, &y).unwrap(), tensor(&pauli(Pauli::Z), &pauli(Pauli::Z)).unwrap()];
        let mut cat = new_catalog(4, 1e-3, 2).unwrap();
        for (targets, product) in [(&row, 1.0), (&col, -1.0)] {
            let ctx = cat.resolve_context(targets).unwrap();
            for i in 0..4 {
                let p: f64 = ctx
                    .targets
                    .iter()
                    .map(|h| match h {
                        ObservableHandle::InBasis { eigenvalues, .. } => eigenvalues[i],
                        ObservableHandle::Scalar(c) => *c,
                    })
                    .product();
                assert_eq!(p, product);
            }
        }
        assert_eq!(cat.len(), 2);
        assert!(cat.is_pairwise_incompatible().unwrap());
    }

    #[test]
    fn single_element_context_matches_resolve_target() {
        let mut cat = new_catalog(2, 1e-3, 8).unwrap();
        let h = cat.resolve_target(&pauli(Pauli::Y)).unwrap();
        let ctx = cat.resolve_context(&[pauli(Pauli::Y)]).unwrap();
        assert_eq!(ctx.targets, vec![h]);
    }

    #[test]
    fn invalid_handles_are_rejected() {
        let cat = new_catalog(2, 1e-3, 0).unwrap();
        let h = ObservableHandle::InBasis { basis: 0, eigenvalues: vec![1.0, -1.0] };
        assert!(h.operator(&cat).is_err());
    }
}
