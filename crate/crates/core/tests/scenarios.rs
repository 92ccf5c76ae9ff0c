use phonon_core::experiments::{builtin, emit_csv, render_csv, run, Pipeline, BUILTINS};

#[test]
fn static_pipeline_output_is_deterministic_across_threads() {
    let mut s = builtin("fig4").unwrap();
    s.sweep.pipeline = Pipeline::EffectiveStatic;
    s.validate().unwrap();
    let one = render_csv(&run(&s, 1).unwrap()).unwrap();
    let four = render_csv(&run(&s, 4).unwrap()).unwrap();
    assert_eq!(one, four);
    let mut lines = one.lines();
    assert_eq!(lines.next().unwrap(), format!("# cfg={}", s.config_hash().unwrap()));
    assert_eq!(lines.next().unwrap(), "delta_d_hz,n_mean,g2_0");
    assert_eq!(lines.count(), 57);

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("fig4.csv");
    emit_csv(&run(&s, 2).unwrap(), &path).unwrap();
    assert_eq!(std::fs::read_to_string(&path).unwrap(), one);
}

#[test]
fn static_detuning_sweep_has_central_dip() {
    let mut s = builtin("fig4").unwrap();
    s.sweep.pipeline = Pipeline::EffectiveStatic;
    let r = run(&s, 0).unwrap();
    assert_eq!(r.failures(), 0);
    let g2 = r.column("g2_0", None).unwrap();
    let centre = g2.iter().find(|p| p.0 == 0.0).unwrap().1;
    let max = g2.iter().map(|p| p.1).fold(0.0, f64::max);
    assert!(centre < 0.05 && max > 1.0, "centre {centre}, max {max}");
}

#[test]
fn sweeps_with_series_run_on_the_static_pipeline() {
    for name in ["fig5a", "fig7b", "fig8b"] {
        let mut s = builtin(name).unwrap();
        s.sweep.pipeline = Pipeline::EffectiveStatic;
        s.validate().unwrap();
        let r = run(&s, 0).unwrap();
        let expected = s.sweep.values.len() * s.sweep.series_values.len().max(1);
        assert_eq!(r.rows.len(), expected, "{name}");
        assert_eq!(r.failures(), 0, "{name}");
    }
}

#[test]
fn every_builtin_names_its_figure() {
    for b in BUILTINS {
        let s = b.scenario();
        assert_eq!(s.name(), b.name);
        assert!(!s.output.description.is_empty());
        assert_eq!(s.file_name(), format!("{}.csv", b.name));
    }
}
