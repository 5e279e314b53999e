//! Eigenstructure checks shared by the acceptance run and the property suite.
//! Each returns `Err` with a description of the first violated identity.

#![allow(dead_code)]

use num_complex::Complex;
use qdcav::polariton::{polariton_modes_2x2, polariton_modes_3x3, rabi_splitting, ComplexMode};

pub const EC: f64 = 1_331_731.450_053_705_6;

type Check = Result<(), String>;

fn sum(modes: &[ComplexMode<f64>]) -> Complex<f64> {
    modes.iter().map(|m| m.eigenvalue()).sum()
}

fn close(a: Complex<f64>, b: Complex<f64>, tol: f64, what: &str) -> Check {
    if (a - b).norm() <= tol {
        Ok(())
    } else {
        Err(format!("{what}: {a} vs {b} (|d| = {:e}, tol {tol:e})", (a - b).norm()))
    }
}

/// Trace conservation, to 1e-10 of the trace.
pub fn trace(ep: f64, em: f64, gx: f64, ec: f64, gc: f64, gp: f64, gm: f64) -> Check {
    let two = polariton_modes_2x2(ep, gx, ec, gc, gp);
    let t2 = Complex::new(ep + ec, -(gx + gc) / 2.0);
    close(sum(&two), t2, 1e-10 * t2.norm(), "2x2 trace")?;
    let three = polariton_modes_3x3(ep, em, gx, ec, gc, gp, gm);
    let t3 = Complex::new(ep + em + ec, -(2.0 * gx + gc) / 2.0);
    close(sum(&three), t3, 1e-10 * t3.norm(), "3x3 trace")
}

/// Half-linewidths add up to `(n_exc·γx + γc)/2`, to 1e-10 relative.
pub fn linewidth_sum(ep: f64, em: f64, gx: f64, ec: f64, gc: f64, gp: f64, gm: f64) -> Check {
    let cases = [
        (polariton_modes_2x2(ep, gx, ec, gc, gp).to_vec(), 1.0),
        (polariton_modes_3x3(ep, em, gx, ec, gc, gp, gm).to_vec(), 2.0),
    ];
    for (modes, n) in cases {
        let got: f64 = modes.iter().map(|m| m.half_linewidth).sum();
        let want = (n * gx + gc) / 2.0;
        if (got - want).abs() > 1e-10 * want {
            return Err(format!("{n} excitons: half-linewidth sum {got} vs {want}"));
        }
        for m in &modes {
            let w: f64 = m.weights.iter().map(|w| w * w).sum();
            if (w - 1.0).abs() > 1e-10 {
                return Err(format!("weights sum to {w}"));
            }
        }
    }
    Ok(())
}

/// With `g_minus = 0` the V-system splits into a bare -1 exciton and the
/// two-mode problem of the +1 branch.
pub fn block_reduction(ep: f64, em: f64, gx: f64, ec: f64, gc: f64, gp: f64) -> Check {
    let three = polariton_modes_3x3(ep, em, gx, ec, gc, gp, 0.0);
    let two = polariton_modes_2x2(ep, gx, ec, gc, gp);
    let bare = Complex::new(em, -gx / 2.0);
    let tol = 1e-9 * ec;
    let dark = three
        .iter()
        .position(|m| (m.eigenvalue() - bare).norm() <= tol)
        .ok_or_else(|| format!("no bare -1 mode among {:?}", three.iter().map(|m| m.eigenvalue()).collect::<Vec<_>>()))?;
    let rest: Vec<_> = three.iter().enumerate().filter(|(i, _)| *i != dark).map(|(_, m)| m).collect();
    for (a, b) in rest.iter().zip(two.iter()) {
        close(a.eigenvalue(), b.eigenvalue(), tol, "block")?;
    }
    Ok(())
}

/// Degenerate branches with equal couplings: one dark mode at the bare
/// exciton, two bright modes of the two-mode problem with `g·√2`.
pub fn bright_dark(e: f64, gx: f64, ec: f64, gc: f64, g: f64) -> Check {
    let three = polariton_modes_3x3(e, e, gx, ec, gc, g, g);
    let two = polariton_modes_2x2(e, gx, ec, gc, g * 2f64.sqrt());
    let bare = Complex::new(e, -gx / 2.0);
    let tol = 1e-9 * ec;
    let dark = three
        .iter()
        .position(|m| (m.eigenvalue() - bare).norm() <= tol)
        .ok_or("no dark mode")?;
    let bright: Vec<_> = three.iter().enumerate().filter(|(i, _)| *i != dark).map(|(_, m)| m).collect();
    for (a, b) in bright.iter().zip(two.iter()) {
        close(a.eigenvalue(), b.eigenvalue(), tol, "bright")?;
    }
    Ok(())
}

/// Smallest real-part gap over a detuning grid equals the closed-form
/// splitting within one grid step. Requires strong coupling.
pub fn gap_minimum(g: f64, gc: f64, gx: f64) -> Check {
    let expected = rabi_splitting(g, gc, gx)
        .map_err(|e| e.to_string())?
        .value()
        .ok_or("not strongly coupled")?;
    let step = g / 500.0;
    // offset so the grid does not land on resonance exactly
    let start = -2.0 * g + 0.37 * step;
    let min_gap = (0..2000)
        .map(|i| {
            let modes = polariton_modes_2x2(EC + start + step * i as f64, gx, EC, gc, g);
            modes[1].energy - modes[0].energy
        })
        .fold(f64::INFINITY, f64::min);
    if (min_gap - expected).abs() <= step {
        Ok(())
    } else {
        Err(format!("grid minimum {min_gap} vs closed form {expected} (step {step})"))
    }
}
