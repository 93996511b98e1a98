//! Poisson regression benchmark on lagged activity.

use migcopula::benchmarks::{fit_poisson_glm, GlmSpec};

fn main() -> migcopula::Result<()> {
    let a = [4, 6, 3, 8, 9, 5, 4, 7, 10, 6, 5, 3, 4, 8, 7, 6, 9, 11, 6, 4];
    for spec in [GlmSpec::intercept_only(), GlmSpec::markov()] {
        let f = fit_poisson_glm(&a, &spec, None, None)?;
        println!("{}: {:?} logL {:.4} AIC {:.4}", f.label, f.estimates, f.loglik, f.aic);
    }
    Ok(())
}
