use sephia_transient::{run_preset, Regime, TransientPreset, PRESET_NAMES};

const P_E: f64 = 4.586e-6;

#[test]
fn presets_fire_in_their_regime_near_one_gigaspike() {
    for name in PRESET_NAMES {
        let p = TransientPreset::builtin(name).unwrap();
        let run = run_preset(&p).unwrap();
        assert_eq!(run.regime, p.expected, "{name}");
        assert!((1e8..=2e9).contains(&run.rate_hz), "{name}: {} spikes/s", run.rate_hz);
        let e = run.energy;
        assert!(
            e.p_average > P_E / 3.0 && e.p_average < 3.0 * P_E,
            "{name}: {} W",
            e.p_average
        );
        assert!((e.breakdown.total() / e.e_total - 1.0).abs() < 1e-3);
    }
    let expected: Vec<Regime> = PRESET_NAMES
        .iter()
        .map(|n| TransientPreset::builtin(n).unwrap().expected)
        .collect();
    assert_eq!(expected, [Regime::Tonic, Regime::Adapting, Regime::Bursting]);
}

#[test]
fn tonic_is_regular_after_two_spikes() {
    let run = run_preset(&TransientPreset::builtin("tonic").unwrap()).unwrap();
    let s = &run.adex.spikes;
    assert!(s.len() >= 5);
    let isis: Vec<f64> = s[2..].windows(2).map(|w| w[1] - w[0]).collect();
    assert!(sephia_transient::regime::cv(&isis) < 0.05);
}

#[test]
fn adapting_intervals_grow_within_the_pulse() {
    let p = TransientPreset::builtin("adapting").unwrap();
    let run = run_preset(&p).unwrap();
    let off = p.input.t_off_s.unwrap();
    let inside: Vec<f64> = run.adex.spikes.iter().copied().filter(|&t| t < off).collect();
    let isis: Vec<f64> = inside.windows(2).map(|w| w[1] - w[0]).collect();
    assert!(isis.len() >= 3);
    assert!(isis.windows(2).all(|w| w[1] > w[0]));
}

/// At 1 mW per channel the own-channel through power is high while the ring
/// is shifted by a spike and suppressed to the notch floor otherwise.
#[test]
fn optical_spikes_mirror_electrical_spikes() {
    let p = TransientPreset::builtin("tonic").unwrap();
    assert_eq!(p.ring.p_in_dbm, 0.0);
    let run = run_preset(&p).unwrap();
    let ch0 = &run.through_w[0];
    let amp = p.spike.amplitude_v;
    let (mut on, mut off) = (Vec::new(), Vec::new());
    for (k, &v) in run.v_dynamic.iter().enumerate() {
        // skip samples within two cavity lifetimes of an edge
        let settled = |j: usize| (run.v_dynamic[j] - v).abs() < 1e-6 * amp;
        let lo = k.saturating_sub(60);
        let hi = (k + 60).min(ch0.len() - 1);
        if !(settled(lo) && settled(hi)) {
            continue;
        }
        if v > 0.99 * amp {
            on.push(ch0[k]);
        } else if v < 0.01 * amp {
            off.push(ch0[k]);
        }
    }
    let mean = |x: &[f64]| x.iter().sum::<f64>() / x.len() as f64;
    assert!(!on.is_empty() && !off.is_empty());
    assert!(mean(&on) > 0.8e-3, "{}", mean(&on));
    assert!(mean(&off) < 0.05e-3, "{}", mean(&off));
}

#[test]
fn waveform_csv_has_one_row_per_sample() {
    let mut p = TransientPreset::builtin("tonic").unwrap();
    p.t_end_s = 2e-9;
    let run = run_preset(&p).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("wave.csv");
    run.write_csv(&path).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "t_s,i_in_a,v_mem_v,w_a,v_spike_v,v_dynamic_v,p_ch0_w,p_ch1_w"
    );
    assert_eq!(lines.count(), run.adex.v.len());
}

#[test]
fn preset_files_load_from_disk() {
    let dir = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("presets");
    for name in PRESET_NAMES {
        let p = TransientPreset::load(&dir.join(format!("{name}.json"))).unwrap();
        assert_eq!(p, TransientPreset::builtin(name).unwrap());
    }
}
