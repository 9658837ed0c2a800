//! The geometric and spectral sides of the trace identity for the constant weight.

use hyperbolic_circle::geodesics::classes_up_to_norm;
use hyperbolic_circle::kernels::{SmoothedCutoff, TestFunction};
use hyperbolic_circle::traceformula::{verify_identity, AutomorphicWeight, QuadratureSpec, TraceFormulaReport};

fn report(x: f64, d: f64, panels: usize) -> TraceFormulaReport {
    let m = TestFunction::difference(&SmoothedCutoff::new(x, d).unwrap());
    let spectrum = classes_up_to_norm(1e4).unwrap();
    let spec = QuadratureSpec::new(panels, 8, 10.0).unwrap();
    verify_identity(&m, &AutomorphicWeight::constant(), &spectrum, &spec).unwrap()
}

#[test]
fn identity_holds_at_two_scales() {
    for (x, d) in [(20.0, 5.0), (30.0, 6.0)] {
        let r = report(x, d, 128);
        assert!(r.hyperbolic_terms > 0);
        assert!(r.residual <= 1e-2, "x = {x}, d = {d}: residual {}", r.residual);
    }
}

#[test]
fn refinement_does_not_degrade() {
    let coarse = report(20.0, 5.0, 128);
    let fine = report(20.0, 5.0, 512);
    assert!(fine.residual <= coarse.residual.max(2e-3), "{} then {}", coarse.residual, fine.residual);
    // The spectral side does not depend on the mesh.
    assert_eq!(coarse.rhs(), fine.rhs());
    // At this resolution dropping any single term would break the identity.
    let terms = [fine.sigma_hyp, fine.sigma_ell, fine.sigma_par, fine.sigma_id];
    for t in terms {
        assert!(t.norm() > 2.0 * fine.residual, "{terms:?} vs residual {}", fine.residual);
    }
}

