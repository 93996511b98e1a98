//! Rolling one-step-ahead log-scores with periodic re-estimation.

use migcopula::copulas::Copula;
use migcopula::inference::FitConfig;
use migcopula::process::{simulate, ModelSpec};
use migcopula::selection_risk::{rolling_log_score, RollingConfig};

fn main() -> migcopula::Result<()> {
    let spec = ModelSpec::mag1(Copula::gumbel(1.6)?);
    let u = simulate(&spec, 120, 500, 5, None)?.u;
    let rolling = RollingConfig {
        min_window: Some(80),
        refit_every: 10,
        fixed_parameters: false,
    };
    let s = rolling_log_score(&u, &spec, None, None, &rolling, &FitConfig::default())?;
    println!(
        "{} origins, average {:?}, {} unbounded",
        s.retained,
        s.average,
        s.unbounded.len()
    );
    Ok(())
}
