use super::params::SivLevelParams;
use crate::error::Result;
use crate::qdyn::{ops, tensor_product, Operator};
use crate::units::{angular, BOHR_MAGNETON, PLANCK};

/// Ground-state Hamiltonian on orbital `{e₊, e₋}` ⊗ spin `{↑, ↓}`, rad/s.
///
/// `H/h = −(Δ/2) σz⊗σz + ε σx⊗1 + q μ_B B_z/h σz⊗1 + (g μ_B / 2h) 1⊗(B·σ)`.
/// The strain term is the linear E⊗e coupling between the two orbitals.
pub fn ground_hamiltonian(params: &SivLevelParams) -> Result<Operator> {
    params.validate()?;
    let id = ops::identity(2);
    let mu = BOHR_MAGNETON / PLANCK;
    let [bx, by, bz] = params.b_field;
    let spin_zeeman = 0.5 * params.spin_g_factor * mu;

    let so = tensor_product(&[ops::sigma_z(), ops::sigma_z()])?.scale(-0.5 * params.delta_gs);
    let strain = tensor_product(&[ops::sigma_x(), id.clone()])?.scale(params.strain_splitting);
    let orbital_zeeman = tensor_product(&[ops::sigma_z(), id.clone()])?.scale(params.orbital_quenching * mu * bz);
    let spin = &(&ops::sigma_x().scale(bx) + &ops::sigma_y().scale(by)) + &ops::sigma_z().scale(bz);
    let spin = tensor_product(&[id, spin])?.scale(spin_zeeman);

    let h_hz = &(&(&so + &strain) + &orbital_zeeman) + &spin;
    Ok(h_hz.scale(angular(1.0)))
}

/// Zero-field LB–UB gap `√(Δ² + (2ε)²)`, Hz.
pub fn orbital_splitting(params: &SivLevelParams) -> f64 {
    params.delta_gs.hypot(2.0 * params.strain_splitting)
}

/// Gap between the centroids of the upper and lower level pairs, Hz,
/// from direct diagonalization (includes Zeeman shifts).
pub fn ground_splitting(params: &SivLevelParams) -> Result<f64> {
    let mut e = ground_hamiltonian(params)?.hermitian_eigenvalues();
    e.sort_by(f64::total_cmp);
    Ok(crate::units::ordinary(0.5 * (e[2] + e[3] - e[0] - e[1])))
}
