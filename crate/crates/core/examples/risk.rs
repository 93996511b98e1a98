//! Monte-Carlo VaR and expected shortfall of future activity counts.

use migcopula::copulas::Copula;
use migcopula::inference::{fit, FitConfig};
use migcopula::process::{simulate, ModelSpec};
use migcopula::selection_risk::plug_in_risk;
use migcopula::transform::DiscreteMarginal;

fn main() -> migcopula::Result<()> {
    let spec = ModelSpec::magmar11(Copula::gaussian(0.5)?, Copula::gaussian(0.2)?);
    let u = simulate(&spec, 300, 500, 8, None)?.u;
    let f = fit(&u, &spec, None, None, &FitConfig::default())?;
    let state = f.final_state.expect("copula fit");
    let marginal = DiscreteMarginal::poisson(6.0)?;
    let to_counts = |u: f64| marginal.quantile(u) as f64;
    for h in [1, 3] {
        let r = plug_in_risk(f.copula_spec().unwrap(), state, None, &to_counts, h, 0.05, 50_000, 99)?;
        println!("h={h}: VaR {} ES {:.3} (VaR se {:.3})", r.var, r.es, r.var_se);
    }
    Ok(())
}
