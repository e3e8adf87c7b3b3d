//! Quasimetric constants, doubling and growth of the shipped spaces.

use grand_morrey::space::presets;

fn main() {
    for space in presets::shipped() {
        let qc = space.quasimetric_constants();
        let doubling = space.doubling_constant();
        let (b, _) = space.growth_constant();
        let chain = space.ball_chain_check(&qc);
        println!(
            "{:<12} n={:<3} C_t={:.4} C_s={:.4} N0={:.4} C_d={:.4} b={:.4} chain failures={}",
            space.name(),
            space.len(),
            qc.c_t,
            qc.c_s,
            qc.n0,
            doubling.c_d,
            b,
            chain.failures
        );
    }
}
