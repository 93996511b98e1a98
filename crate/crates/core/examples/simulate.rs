//! Simulated MAGMAR(1,1) path with Gumbel innovations.

use migcopula::copulas::Copula;
use migcopula::process::{simulate, ModelSpec};

fn main() -> migcopula::Result<()> {
    let spec = ModelSpec::magmar11(Copula::gumbel(1.8)?, Copula::gumbel(1.4)?);
    let path = simulate(&spec, 1000, 500, 42, None)?;
    let mean = path.u.iter().sum::<f64>() / path.len() as f64;
    println!("{}: {} steps, mean U {:.4}", spec.label(), path.len(), mean);
    for t in 0..5 {
        println!("t={t} u={:.4} w={:.4}", path.u[t], path.w[t]);
    }
    Ok(())
}
