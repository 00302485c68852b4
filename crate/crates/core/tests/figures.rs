use cavity_qsl::sweep::{figure_dataset, FigureId};

/// Below the located onset every grid point has N within the threshold and a
/// ratio that differs from 1 by no more than that N allows; above it every grid
/// point shows backflow with ratio below 1.
fn check_sharp_transition(figure: FigureId) {
    let data = figure_dataset(figure, figure.default_tau()).unwrap();
    for curve in &data.curves {
        let c = curve.critical.as_ref().unwrap();
        for row in &curve.rows {
            assert!(row.is_ok(), "{} {:?}", curve.label, row);
            if row.param < c.bracket.0 {
                assert!(row.n_blp <= data.threshold, "{} at {}", curve.label, row.param);
                // ratio = loss / (loss + 2N)
                let slack = 2.0 * data.threshold / (1.0 - row.final_pop) + 1e-12;
                assert!(row.qslt_ratio <= 1.0 + 1e-9, "{} at {}", curve.label, row.param);
                assert!(1.0 - row.qslt_ratio <= slack, "{} at {}", curve.label, row.param);
            } else if row.param > c.bracket.1 {
                assert!(row.n_blp > data.threshold, "{} re-entrant zero at {}", curve.label, row.param);
                assert!(row.qslt_ratio < 1.0, "{} at {}", curve.label, row.param);
            }
        }
    }
}

#[test]
fn figure1_transition() {
    check_sharp_transition(FigureId::Fig1);
}

#[test]
fn figure2_transition() {
    check_sharp_transition(FigureId::Fig2);
}

#[test]
fn figure3_transition() {
    check_sharp_transition(FigureId::Fig3);
}

#[test]
fn figure_curve_families() {
    let fig1 = figure_dataset(FigureId::Fig1, 1.0).unwrap();
    assert_eq!(fig1.curves.len(), 2);
    assert!(fig1.curves.iter().all(|c| c.rows.len() == 400));
    let (weak, strong) = (&fig1.curves[0], &fig1.curves[1]);
    assert_eq!(weak.label, "lambda-5");
    assert_eq!(strong.label, "lambda-0.01");
    let onset = weak.critical.as_ref().unwrap().value;
    for (w, s) in weak.rows.iter().zip(&strong.rows) {
        if w.param > onset + 0.01 {
            assert!(s.n_blp > w.n_blp);
        }
    }
}
