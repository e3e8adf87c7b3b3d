//! Sobolev exponents, the auxiliary function phi_bar and its inverse.

use grand_morrey::scales::{sobolev_exponent, AdmissibilityMode, PotentialSetup};

fn main() -> grand_morrey::Result<()> {
    let (p, lambda, alpha, gamma) = (2.0, 0.5, 0.125, 1.0);
    let q = sobolev_exponent(p, lambda, alpha, gamma)?;
    println!("p = {p}, lambda = {lambda}, alpha = {alpha}: q = {q}");

    let setup = PotentialSetup::linear_preset(p, lambda, alpha, gamma, 1.0, 0.05)?;
    println!("theta_2 threshold {:.4}, delta {:.4}", setup.theta2_threshold(), setup.delta);
    for x in [1e-4, 1e-3, 1e-2, setup.delta] {
        let y = setup.phi_bar(x)?;
        let back = setup.invert_phi_bar(y)?;
        println!("phi_bar({x:.1e}) = {y:.6e}, inverse {:.6e}", back.x);
    }
    let adm = setup.check_admissibility(AdmissibilityMode::PhiBar);
    println!("admissible: {} {:?}", adm.admissible, adm.reasons);
    Ok(())
}
