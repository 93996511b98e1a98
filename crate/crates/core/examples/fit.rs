//! Maximum-likelihood fit of a MAG(1) model to a simulated series.

use migcopula::copulas::Copula;
use migcopula::inference::{fit, FitConfig};
use migcopula::process::{simulate, ModelSpec};

fn main() -> migcopula::Result<()> {
    let truth = ModelSpec::mag1(Copula::gaussian(0.5)?);
    let u = simulate(&truth, 800, 500, 7, None)?.u;
    let start = ModelSpec::mag1(Copula::gaussian(0.1)?);
    let f = fit(&u, &start, None, None, &FitConfig::default())?;
    for (i, name) in f.names.iter().enumerate() {
        println!("{name} = {:.4} (se {:.4})", f.estimates[i], f.std_errors[i].unwrap_or(f64::NAN));
    }
    println!("logL {:.3} AIC {:.3} BIC {:.3}", f.loglik, f.aic, f.bic);
    Ok(())
}
