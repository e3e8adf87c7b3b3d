//! Certifying boundedness of the maximal operator on a grand Morrey space.

use grand_morrey::certify::{certify_boundedness, generate_family, CertParams, FamilySpec, TheoremId};
use grand_morrey::scales::FreeConstants;
use grand_morrey::space::presets;

fn main() -> grand_morrey::Result<()> {
    let space = presets::uniform_grid(16);
    let family = generate_family(&space, &FamilySpec::Mixed { seed: 1 })?;
    for theorem in [TheoremId::MaximalMorrey, TheoremId::MaximalGrand] {
        let report = certify_boundedness(theorem, &space, &family, &CertParams::default(), &FreeConstants::default())?;
        println!("{theorem}: {}", report.statement);
        println!("  ratio {:.4} ({}), pass {}", report.ratio.ratio, report.ratio.witness, report.pass);
        if let Some(c) = &report.constant {
            println!("  constant {} = {:.4}", c.expression, c.value);
        }
        if let Some(red) = &report.reduction {
            println!("  sigma {:.3}, refinement stable {}", red.sigma, red.refinement_stable);
        }
    }
    Ok(())
}
