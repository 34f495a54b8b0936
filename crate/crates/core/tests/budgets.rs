use lagcons::claws::{self, audit, evaluate_additional_2, work_balance, AuditError, AuditTolerances, LawId};
use lagcons::setup::{make_initial_layer, Problem};
use lagcons::{step, EosMode, Geometry, GridLayer, SchemeParams, TwoLayerView};

const GEOMETRIES: [Geometry; 3] = [Geometry::Planar, Geometry::Cylindrical, Geometry::Spherical];

fn pulse(g: Geometry, cells: usize) -> (GridLayer, SchemeParams) {
    let problem = Problem::SmoothPulse {
        cells,
        length: 1.0,
        amplitude: 0.1,
        pressure_amplitude: 0.1,
        center: 0.5,
        half_width: 0.25,
    };
    let (profile, params) = problem.build(g);
    (make_initial_layer(&profile, g).unwrap(), params)
}

fn run<F: FnMut(&TwoLayerView<'_>)>(
    mut layer: GridLayer,
    params: &SchemeParams,
    tau: f64,
    steps: usize,
    mut f: F,
) -> GridLayer {
    for _ in 0..steps {
        let (hi, _) = step(&layer, tau, params).unwrap();
        f(&TwoLayerView::new(&layer, &hi, tau).unwrap());
        layer = hi;
    }
    layer
}

#[test]
fn basic_laws_close_on_pulse() {
    for g in GEOMETRIES {
        for mode in [EosMode::Pointwise, EosMode::Conservative] {
            let (layer, params) = pulse(g, 50);
            let params = params.with_eos_mode(mode);
            let tol = AuditTolerances::for_params(&params);
            run(layer, &params, 2e-3, 20, |view| {
                for law in LawId::ALL {
                    match audit(law, view, &params) {
                        Ok(b) => {
                            assert!(
                                b.within(&tol),
                                "{g:?} {mode:?} {law}: cell {:e} rel {:e}",
                                b.per_cell_residual_max,
                                b.relative_defect()
                            );
                        }
                        Err(AuditError::NotApplicable { .. }) => {}
                    }
                }
                let wb = work_balance(view, &params).iter().fold(0.0f64, |a, v| a.max(v.abs()));
                assert!(wb <= 10.0 * params.newton_tol, "{g:?} {mode:?} work {wb:e}");
            });
        }
    }
}

#[test]
fn extra_laws_fail_away_from_special_gamma() {
    for g in GEOMETRIES {
        let (layer, params) = pulse(g, 50);
        let good = params.clone().with_eos_mode(EosMode::Conservative);
        let mut bad = good.clone();
        bad.gamma = 1.4;
        let mut worst_good = 0.0f64;
        let mut worst_bad = 0.0f64;
        let mut worst_ablated = 0.0f64;
        let mut worst_pointwise = 0.0f64;
        let pointwise = params.clone().with_eos_mode(EosMode::Pointwise);
        run(layer.clone(), &good, 2e-3, 10, |view| {
            worst_good = worst_good.max(claws::audit_additional_1(view, &good).unwrap().per_cell_residual_max);
            worst_good = worst_good.max(claws::audit_additional_2(view, &good).unwrap().per_cell_residual_max);
            worst_ablated = worst_ablated.max(evaluate_additional_2(view, &good, false).per_cell_residual_max);
        });
        run(layer.clone(), &pointwise, 2e-3, 10, |view| {
            assert!(claws::audit_additional_1(view, &pointwise).is_err());
            worst_pointwise = worst_pointwise.max(claws::evaluate_additional_1(view, &pointwise).per_cell_residual_max);
        });
        run(layer, &bad, 2e-3, 10, |view| {
            worst_bad = worst_bad.max(claws::audit_additional_1(view, &bad).unwrap().per_cell_residual_max);
        });
        assert!(worst_good <= 1e2 * good.newton_tol);
        let floor = 1e4 * worst_good.max(1e-300);
        assert!(worst_bad >= floor, "{g:?} gamma control {worst_bad:e}");
        assert!(worst_ablated >= floor, "{g:?} ablation control {worst_ablated:e}");
        assert!(worst_pointwise >= floor, "{g:?} pointwise control {worst_pointwise:e}");
    }
}
