//! Riesz-type potentials on a uniform grid and their domination by the maximal function.

use grand_morrey::certify::{generate_family, riesz_maximal_domination, FamilySpec};
use grand_morrey::norms::GridFunction;
use grand_morrey::operators::{potential, PotentialKind};
use grand_morrey::space::presets;

fn main() -> grand_morrey::Result<()> {
    let space = presets::uniform_grid(32);
    let f = GridFunction::indicator(32, &[10, 11, 12, 13]);
    let kinds = [
        PotentialKind::Gamma { alpha: 0.25, gamma: 1.0 },
        PotentialKind::Measure { alpha: 0.25 },
        PotentialKind::KAlpha { alpha: 0.25 },
    ];
    for kind in kinds {
        let u = potential(&f, &space, kind)?;
        let peak = u.values().iter().cloned().fold(0.0, f64::max);
        println!("{kind:?}: max = {peak:.4}, at x = 0: {:.4}", u.values()[0]);
    }

    let family = generate_family(&space, &FamilySpec::BallIndicators)?;
    let dom = riesz_maximal_domination(&space, &family, 0.25, 1.0)?;
    println!(
        "I^alpha f <= c Mf holds with c = {:.4} over {} members (worst {} at x = {})",
        dom.ratio, dom.members_checked, dom.witness, dom.point
    );
    Ok(())
}
