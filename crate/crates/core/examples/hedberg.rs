//! Pointwise Hedberg bound for K_alpha against the modified maximal function.

use grand_morrey::certify::{generate_family, verify_hedberg, FamilySpec};
use grand_morrey::space::presets;

fn main() -> grand_morrey::Result<()> {
    let space = presets::uniform_grid(32);
    let n0 = space.quasimetric_constants().n0;
    let family = generate_family(&space, &FamilySpec::Mixed { seed: 11 })?;
    for (p, lambda, alpha) in [(2.0, 0.5, 0.1), (1.5, 0.3, 0.2), (3.0, 0.0, 0.25)] {
        let r = verify_hedberg(&space, &family, p, lambda, alpha, n0)?;
        println!(
            "p={p} lambda={lambda} alpha={alpha}: constant {:.3}, {} points, {} failures, worst lhs/rhs {:.4}",
            r.constant.value, r.points_checked, r.failures, r.worst_ratio
        );
    }
    Ok(())
}
