//! The SMO dual solver on its own, on a two-point problem and a small RBF one.
//!
//!     cargo run --example smo_dual

use income_panel::learners::{smo_solve, Kernel, SmoConfig};

fn main() -> income_panel::Result<()> {
    let sol = smo_solve(&[vec![-1.0], vec![1.0]], &[-1.0, 1.0], Kernel::Linear, &SmoConfig { c: 10.0, ..Default::default() })?;
    println!("two points: alpha = {:?}, b = {}, f(x) = x", sol.alpha, sol.bias);

    // XOR is not linearly separable but is with an RBF kernel
    let x = vec![vec![0.0, 0.0], vec![1.0, 1.0], vec![0.0, 1.0], vec![1.0, 0.0]];
    let y = [-1.0, -1.0, 1.0, 1.0];
    let kernel = Kernel::Rbf { gamma: 2.0 };
    let sol = smo_solve(&x, &y, kernel, &SmoConfig { c: 100.0, ..Default::default() })?;
    println!("xor: {} iterations, dual objective {:.6}", sol.iterations, sol.objective);
    for (xi, yi) in x.iter().zip(y) {
        let f: f64 = x.iter().zip(&sol.alpha).zip(y).map(|((xk, a), yk)| a * yk * kernel.eval(xk, xi)).sum::<f64>() + sol.bias;
        println!("  {xi:?} label {yi:+} decision {f:+.4}");
    }
    Ok(())
}
