//! Closed-form dual proximal maps next to the golden-section oracle.

use pdextra::prox::prox_oracle;
use pdextra::ScalarProxSpec;

fn main() -> pdextra::Result<()> {
    let sigma = 2.0;
    let cases = [
        (
            "l1    alpha=0.01 gamma=1e-3",
            ScalarProxSpec::l1(0.01, 1e-3)?,
        ),
        (
            "linf  delta=0.1  gamma=0.5",
            ScalarProxSpec::linf(0.1, 0.5)?,
        ),
        (
            "state alpha=0.5  gamma=0.1 c=0.68 yd=0.3",
            ScalarProxSpec::state(0.5, 0.1, 0.68, 0.3)?,
        ),
    ];
    for (name, spec) in cases {
        println!("{name}, sigma = {sigma}");
        println!("      v      closed form           oracle    f_gamma(v)");
        for v in [-250.0, -3.0, -1.0, -0.1, 0.0, 0.5, 1.5, 3.0, 250.0] {
            println!(
                "{v:7.1}  {:15.10}  {:15.10}  {:12.6e}",
                spec.prox_fstar(v, sigma),
                prox_oracle(&spec, v, sigma),
                spec.fgamma(v)
            );
        }
        println!();
    }
    Ok(())
}
