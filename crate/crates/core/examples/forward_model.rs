//! Forward solve, linearization and adjoint on the exact coefficient.

use pdextra::fem1d::{adjoint_apply, derivative_apply, forward_solve};
use pdextra::problems::exact_coefficient;
use pdextra::{ElementField, Mesh1D, NodalField, Source};

fn main() -> pdextra::Result<()> {
    let n = std::env::args()
        .nth(1)
        .and_then(|a| a.parse().ok())
        .unwrap_or(1000);
    let mesh = Mesh1D::new(n)?;
    let u = ElementField::from_midpoints(&mesh, exact_coefficient);
    let f = Source::Constant(1.0);
    let y = forward_solve(&mesh, &u, &f)?;

    println!("n = {n}, h = {}", mesh.h());
    println!("  x        y(x)");
    for j in (0..=n).step_by((n / 8).max(1)) {
        println!("{:6.3}  {:.10}", mesh.nodes()[j], y[j]);
    }
    println!(
        "‖u‖² = {:.10} (exact 14/3 = {:.10})",
        mesh.x_inner(&u, &u),
        14.0 / 3.0
    );

    let du = ElementField::from_midpoints(&mesh, |x| (std::f64::consts::PI * x).cos());
    let p = NodalField::from_nodes(&mesh, |x| 1.0 - x * x);
    let w = derivative_apply(&mesh, &u, &y, &du)?;
    let z = adjoint_apply(&mesh, &u, &y, &p)?;
    let (lhs, rhs) = (mesh.y_inner(&w, &p), mesh.x_inner(&du, &z));
    println!("<S'(u)du, p> = {lhs:.15e}");
    println!("<du, S'(u)*p> = {rhs:.15e}");
    println!("asymmetry of y: {:e}", y.asymmetry());
    Ok(())
}
