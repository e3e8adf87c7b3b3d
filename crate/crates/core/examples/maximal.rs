//! Maximal and modified maximal functions, weak type and the L^p bound.

use grand_morrey::certify::{generate_family, modified_maximal_lp_ratio, verify_weak_type, FamilySpec};
use grand_morrey::norms::GridFunction;
use grand_morrey::operators::{maximal, modified_maximal};
use grand_morrey::space::presets;

fn main() -> grand_morrey::Result<()> {
    let space = presets::uniform_grid(16);
    let n0 = space.quasimetric_constants().n0;
    let f = GridFunction::indicator(16, &[3, 4, 5]);
    println!("f   = {:?}", f.values());
    println!("Mf  = {:.3?}", maximal(&f, &space)?.values());
    println!("M~f = {:.3?}", modified_maximal(&f, &space, n0)?.values());

    let family = generate_family(&space, &FamilySpec::Mixed { seed: 7 })?;
    let weak = verify_weak_type(&space, &family, n0)?;
    println!("weak type: worst ratio {:.6} over {} thresholds", weak.worst_ratio, weak.thresholds_checked);
    for p in [1.5f64, 2.0, 3.0] {
        let (ratio, witness) = modified_maximal_lp_ratio(&space, &family, p, n0)?;
        let bound = 2.0 * (p / (p - 1.0)).powf(1.0 / p);
        println!("p = {p}: ||M~f||_p / ||f||_p = {ratio:.4} ({witness}), bound {bound:.4}");
    }
    Ok(())
}
