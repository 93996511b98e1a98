//! Mixed-difference transform of counts to a uniform series.

use migcopula::transform::{mixed_difference, DiscreteMarginal, PitMode};

fn main() -> migcopula::Result<()> {
    let a = [3, 1, 4, 1, 5, 9, 2, 6, 5, 3, 5];
    let marginal = DiscreteMarginal::empirical(&a)?;
    let mid = mixed_difference(&a, &marginal, 1, PitMode::Mid)?;
    let rand = mixed_difference(&a, &marginal, 1, PitMode::Randomized)?;
    println!("marginal {}", marginal.to_json());
    for ((a, m), r) in a.iter().zip(&mid.u).zip(&rand.u) {
        println!("a={a} mid={m:.4} randomized={r:.4}");
    }
    Ok(())
}
