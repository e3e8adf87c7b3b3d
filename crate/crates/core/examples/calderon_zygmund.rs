//! Validating a discrete Hilbert kernel and applying it.

use grand_morrey::norms::{lebesgue_norm, GridFunction};
use grand_morrey::operators::{cz_apply, KernelSpec, ModulusSpec, ValidatedKernel, DEFAULT_FILTER_CONSTANT};
use grand_morrey::space::presets;

fn main() -> grand_morrey::Result<()> {
    let space = presets::uniform_grid(32);
    let kernel = ValidatedKernel::new(
        KernelSpec::Hilbert,
        ModulusSpec::Power { exponent: 1.0 },
        &space,
        DEFAULT_FILTER_CONSTANT,
    )?;
    let report = kernel.report();
    println!("size constant       {:.4}", report.size_constant);
    println!("smoothness constant {:.4} over {} triples", report.smoothness.constant, report.smoothness.triples);
    println!("Dini integral       {:?}", report.modulus.dini.value);
    println!("L^2 operator norm   {:.4} (converged: {})", report.l2_norm, report.l2_converged);

    let f = GridFunction::indicator(32, &(8..16).collect::<Vec<_>>());
    let tf = cz_apply(&f, &space, &kernel)?;
    println!("||Tf||_2 / ||f||_2 = {:.4}", lebesgue_norm(&tf, &space, 2.0)? / lebesgue_norm(&f, &space, 2.0)?);
    Ok(())
}
