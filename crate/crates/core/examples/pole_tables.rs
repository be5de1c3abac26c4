//! Zeros of `K_{l+1/2}` and of the combined Bessel expression for a few degrees.

use tdnrbc::specfun::{combined_zeros, k_zeros};

fn main() -> tdnrbc::Result<()> {
    for l in [1, 2, 5, 10] {
        let k = k_zeros(l)?;
        let m = combined_zeros(l)?;
        println!("l = {l}: {} K poles (max residual {:.1e}), {} combined poles (max residual {:.1e})",
            k.len(), k.max_residual(), m.len(), m.max_residual());
        for z in &k.poles {
            println!("    {:+.12} {:+.12}i", z.re, z.im);
        }
    }
    Ok(())
}
