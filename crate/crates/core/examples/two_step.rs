//! Adjusted two-step estimator for MAGMAR(1,1).

use migcopula::copulas::Copula;
use migcopula::inference::{fit_adjusted_two_step, FitConfig};
use migcopula::process::{simulate, ModelSpec};

fn main() -> migcopula::Result<()> {
    let spec = ModelSpec::magmar11(Copula::gaussian(0.5)?, Copula::gaussian(0.3)?);
    let u = simulate(&spec, 600, 500, 3, None)?.u;
    let config = FitConfig {
        psi_draws: 20_000,
        ..FitConfig::default()
    };
    let two = fit_adjusted_two_step(&u, &spec, None, &config, 11)?;
    println!("stage 1 {:?} logL {:.4}", two.stage1.estimates, two.stage1.loglik);
    println!("stage 2 {:?} logL {:.4}", two.stage2.estimates, two.stage2.loglik);
    println!("KS of adjusted series {:.4}", two.adjusted_ks);
    Ok(())
}
