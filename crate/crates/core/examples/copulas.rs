//! Distribution, density and h-functions of the three copula families.

use migcopula::copulas::Copula;

fn main() -> migcopula::Result<()> {
    let families = [
        Copula::gaussian(0.6)?,
        Copula::student_t(0.6, 4.0)?,
        Copula::gumbel(2.0)?,
    ];
    let (u1, u2) = (0.3, 0.8);
    for c in &families {
        let v = c.h(u1, u2)?;
        println!(
            "{:<10} C={:.6} c={:.6} h={:.6} h_inv(h)={:.6}",
            c.family().name(),
            c.cdf(u1, u2)?,
            c.density(u1, u2)?,
            v,
            c.h_inv(v, u2)?
        );
    }
    Ok(())
}
