//! Lebesgue, Morrey and grand Morrey norms of a power profile on a uniform grid.

use grand_morrey::norms::{GridFunction, NormSpec};
use grand_morrey::scales::{MorreyVariant, ScaleSpec};
use grand_morrey::space::presets;

fn main() -> grand_morrey::Result<()> {
    let space = presets::uniform_grid(64);
    let f = GridFunction::new((0..64).map(|i| (i as f64 + 0.5).powf(-0.4)).collect())?;
    let phi = ScaleSpec::Power { theta: 1.0, scale: 1.0 };
    let norms = [
        ("L^2", NormSpec::Lebesgue { p: 2.0 }),
        ("grand L^2", NormSpec::GrandLebesgue { p: 2.0, theta: 1.0 }),
        ("Morrey", NormSpec::Morrey { p: 2.0, lambda: 0.5, variant: MorreyVariant::MeasurePower, range: None }),
        (
            "grand Morrey, A = 0",
            NormSpec::GrandMorrey {
                p: 2.0,
                lambda: 0.5,
                phi: phi.clone(),
                a: ScaleSpec::Zero,
                variant: MorreyVariant::MeasurePower,
            },
        ),
        (
            "grand Morrey, A = 0.2 x",
            NormSpec::GrandMorrey {
                p: 2.0,
                lambda: 0.5,
                phi,
                a: ScaleSpec::Linear { slope: 0.2 },
                variant: MorreyVariant::MeasurePower,
            },
        ),
    ];
    for (label, spec) in &norms {
        let report = spec.prepare(&space)?.evaluate(&f)?;
        match report.argmax_eps {
            Some(eps) => println!("{label:<24} {:.6} at eps = {eps:.4e}", report.value),
            None => println!("{label:<24} {:.6}", report.value),
        }
    }
    Ok(())
}
