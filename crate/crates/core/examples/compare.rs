//! Nested models compared by information criteria and a likelihood-ratio test.

use migcopula::copulas::Copula;
use migcopula::inference::{fit, FitConfig};
use migcopula::process::{simulate, ModelSpec};
use migcopula::selection_risk::{nested_df, ComparisonRow, ComparisonTable};

fn main() -> migcopula::Result<()> {
    let truth = ModelSpec::magmar11(Copula::gaussian(0.4)?, Copula::gaussian(0.3)?);
    let u = simulate(&truth, 500, 500, 21, None)?.u;
    let config = FitConfig::default();
    let mag1 = fit(&u, &ModelSpec::mag1(Copula::gaussian(0.3)?), None, None, &config)?;
    let magmar = fit(&u, &truth, None, None, &config)?;
    let mut table = ComparisonTable::default();
    table.rows.push(ComparisonRow::from_fit(&mag1, None));
    table.rows.push(ComparisonRow::from_fit(&magmar, None));
    if nested_df(&mag1, &magmar).is_some() {
        table.add_lr(&mag1, &magmar)?;
    }
    print!("{}", table.to_text());
    Ok(())
}
