//! Acceptance report: one PASS/FAIL line per criterion.
//!
//! Runs without the libtest harness so the report always prints. The process
//! fails only when a criterion outside `KNOWN_RED` fails; known reds print
//! their analysis instead of being hidden.

use std::f64::consts::{FRAC_PI_2, PI};
use std::path::PathBuf;
use std::process::ExitCode;

use num_complex::Complex64;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use zeno_switch::calibration::{calibrate, LabObservables};
use zeno_switch::config::{load_config, parse_config_in, RunConfig, Scenario};
use zeno_switch::dynamics::{
    mode_lifetime, scan_asymmetry, simulate_pulse, simulate_pulse_from, simulate_scan, stored_flux,
    switching_contrast, PumpWaveform,
};
use zeno_switch::model::{crystal_mix, frequency_ratio, in_couple, reflected_field};
use zeno_switch::steady::{
    closed_form_resonant, fixed_point_oracle, general_steady_state, steady_contrast,
};
use zeno_switch::{CavityParams, IntracavityState, MixingStrength};

/// Criteria expected to fail, with the reason.
const KNOWN_RED: &[(&str, &str)] = [
    (
        "calibration fidelity",
        "t_s = sqrt(1 - 0.938) = 0.24900 sits 1.0e-3 from the rounded 0.250; \
         the stated tolerance cannot hold for t_s while r_s = sqrt(0.938) passes",
    ),
    (
        "saturation shape",
        "the resonant transmission has an exact zero where cos(g sqrt(P)) = rho_d \
         (about 45.5 W), so rel(40 W) and rel(100 W) are both tiny but differ by \
         more than an order of magnitude; the 0-10 W drop holds",
    ),
]
.as_slice();

struct Outcome {
    name: &'static str,
    pass: bool,
    detail: String,
}

type Check = fn() -> Result<Outcome, String>;

fn outcome(name: &'static str, pass: bool, detail: String) -> Result<Outcome, String> {
    Ok(Outcome { name, pass, detail })
}

fn preset(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../presets")
        .join(name)
}

fn load(name: &str) -> Result<RunConfig, String> {
    load_config(&preset(name)).map_err(|e| format!("{name}: {e}"))
}

fn params_of(cfg: &RunConfig) -> Result<CavityParams, String> {
    cfg.params.ok_or_else(|| "preset has no params".to_string())
}

fn pulse_of(cfg: &RunConfig) -> Result<(PumpWaveform, f64), String> {
    match &cfg.scenario {
        Scenario::Pulse { pump, duration } => Ok((pump.clone(), *duration)),
        other => Err(format!("expected a pulse preset, got {:?}", other.kind())),
    }
}

fn peak_of(pump: &PumpWaveform) -> f64 {
    match pump {
        PumpWaveform::Rectangular { peak, .. } | PumpWaveform::Trapezoidal { peak, .. } => *peak,
        PumpWaveform::Table(s) => s.iter().map(|(_, p)| *p).fold(0.0, f64::max),
    }
}

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

fn calibration_fidelity() -> Result<Outcome, String> {
    let cfg = load("calibrate.conf")?;
    let Scenario::Calibrate(obs) = cfg.scenario else {
        return Err("calibrate preset has the wrong scenario".into());
    };
    assert_eq!(obs, LabObservables::measured());
    let p = calibrate(&obs).map_err(err)?;
    let pairs = [
        ("r_s", p.r_s, 0.968),
        ("t_s", p.t_s, 0.250),
        ("eta_s", p.eta_s, 0.977),
        ("rho_d", p.rho_d, 0.989),
        ("g", p.g, 0.022),
    ];
    let mut pass = true;
    let mut parts = Vec::new();
    for (name, got, want) in pairs {
        let ok = (got - want).abs() <= 1e-3;
        pass &= ok;
        parts.push(format!(
            "{name} {got:.6} vs {want} ({})",
            if ok { "ok" } else { "off" }
        ));
    }
    outcome("calibration fidelity", pass, parts.join(", "))
}

fn random_unitary(rng: &mut StdRng, detuned: bool) -> CavityParams {
    let r_s: f64 = rng.gen_range(0.3..0.99);
    let mut p = CavityParams {
        r_s,
        t_s: (1.0 - r_s * r_s).sqrt(),
        eta_s: rng.gen_range(0.7..1.0),
        rho_d: rng.gen_range(0.0..0.995),
        g: rng.gen_range(0.001..0.08),
        ..CavityParams::doubly_resonant()
    };
    if detuned {
        p.phi_s = rng.gen_range(-PI..PI);
        p.phi_d = rng.gen_range(-PI..PI);
    }
    p
}

fn solver_equivalence() -> Result<Outcome, String> {
    let mut rng = StdRng::seed_from_u64(0x5eed_2e70);
    let sets = 1200;
    let (mut worst_oracle, mut worst_closed) = (0.0f64, 0.0f64);
    let mut resonant = 0;
    for i in 0..sets {
        let detuned = i % 2 == 1;
        let p = random_unitary(&mut rng, detuned);
        let i_p = rng.gen_range(0.0..300.0);
        let general = general_steady_state(&p, i_p).map_err(err)?;
        let oracle = fixed_point_oracle(&p, i_p, 1e-14, 5_000_000).map_err(err)?;
        worst_oracle = worst_oracle.max(general.max_difference(&oracle));
        if !detuned {
            resonant += 1;
            let closed = closed_form_resonant(&p, i_p).map_err(err)?;
            worst_closed = worst_closed.max(general.max_difference(&closed));
        }
    }
    outcome(
        "solver equivalence",
        worst_oracle <= 1e-9 && worst_closed <= 1e-12,
        format!(
            "{sets} sets: max |general - oracle| = {worst_oracle:.2e} (<= 1e-9), \
             max |general - closed| = {worst_closed:.2e} over {resonant} resonant sets (<= 1e-12)"
        ),
    )
}

fn lossy_regime() -> Result<Outcome, String> {
    let cfg = load("fig4.conf")?;
    let p = params_of(&cfg)?;
    let (pump, _) = pulse_of(&cfg)?;
    let i_p = peak_of(&pump);
    let c = steady_contrast(&p, i_p).map_err(err)?;
    let c3 = steady_contrast(&CavityParams { rho_d: 1e-3, ..p }, i_p).map_err(err)?;
    let pass = (c - 1.55).abs() <= 0.01 && (c3 - 1.55).abs() <= 0.01 && (c - 1.6).abs() <= 0.1;
    outcome(
        "lossy-DF contrast",
        pass,
        format!(
            "eta_s {}, {i_p} W: contrast {c:.4} (rho_d {}), {c3:.4} (rho_d 1e-3); target 1.55 +/- 0.01, measured 1.6",
            p.eta_s, p.rho_d
        ),
    )
}

fn doubly_resonant() -> Result<Outcome, String> {
    let cfg = load("fig2.conf")?;
    let p = params_of(&cfg)?;
    let (pump, duration) = pulse_of(&cfg)?;
    let i_p = peak_of(&pump);
    let model = steady_contrast(&p, i_p).map_err(err)?;
    let trace = simulate_pulse(&p, &pump, duration).map_err(err)?;
    let traced = switching_contrast(&trace, &pump).map_err(err)?.value();
    outcome(
        "doubly resonant contrast",
        model >= 35.0 && (model - 150.0).abs() <= 2.0 && traced >= 35.0,
        format!(
            "steady contrast at {i_p} W = {model:.3} (150 +/- 2, >= 35); \
             20 ns pulse trace contrast = {traced:.1} (>= 35)"
        ),
    )
}

fn over_rotation() -> Result<Outcome, String> {
    let p = params_of(&load("fig5.conf")?)?;
    let power = (2.0 * PI / p.g).powi(2);
    let off = general_steady_state(&p, 0.0).map_err(err)?.transmission();
    let rel = general_steady_state(&p, power).map_err(err)?.transmission() / off;
    let pass = (rel - 1.0).abs() <= 1e-6
        && (power - 81.6e3).abs() <= 100.0
        && (power / 80e3 - 1.0).abs() <= 0.05;
    outcome(
        "over-rotation point",
        pass,
        format!(
            "(2 pi / g)^2 = {:.1} W (81.6 kW +/- 0.1 kW, {:+.2}% from 80 kW), rel. transmission there = {rel:.9}",
            power,
            100.0 * (power / 80e3 - 1.0)
        ),
    )
}

fn saturation_shape() -> Result<Outcome, String> {
    let p = params_of(&load("fig5.conf")?)?;
    let t = |w: f64| {
        general_steady_state(&p, w)
            .map(|s| s.transmission())
            .map_err(err)
    };
    let off = t(0.0)?;
    let (r10, r40, r100) = (t(10.0)? / off, t(40.0)? / off, t(100.0)? / off);
    let spread = (r40 - r100).abs() / r40.max(r100);
    let drop = 1.0 - r10;
    outcome(
        "saturation shape",
        spread < 0.10 && drop > 0.80,
        format!(
            "rel(40 W) = {r40:.3e}, rel(100 W) = {r100:.3e}, relative difference {:.1}% (< 10%); \
             0 -> 10 W drop {:.2}% (> 80%); |rel(40) - rel(100)| = {:.1e} absolute",
            100.0 * spread,
            100.0 * drop,
            (r40 - r100).abs()
        ),
    )
}

fn detuning_signs() -> Result<Outcome, String> {
    let mut parts = Vec::new();
    let mut pass = true;
    let change = |cfg: &RunConfig| -> Result<(f64, CavityParams), String> {
        let p = params_of(cfg)?;
        let (pump, _) = pulse_of(cfg)?;
        let off = general_steady_state(&p, 0.0).map_err(err)?.transmission();
        let on = general_steady_state(&p, peak_of(&pump))
            .map_err(err)?
            .transmission();
        Ok((on / off - 1.0, p))
    };
    let (co, pa) = change(&load("fig3a.conf")?)?;
    let (counter, pb) = change(&load("fig3b.conf")?)?;
    // the same check with both detunings mirrored
    let (co_m, _) = change(&mirrored(&load("fig3a.conf")?)?)?;
    let (counter_m, _) = change(&mirrored(&load("fig3b.conf")?)?)?;
    pass &= co > 0.0 && co_m > 0.0 && counter < 0.0 && counter_m < 0.0;
    parts.push(format!(
        "phi_s = {:+.4} (signal HWHM {:.4}): co-signed {:+.1}%/{:+.1}%, counter-signed {:+.1}%/{:+.1}%",
        pa.phi_s,
        pa.signal_half_width(),
        100.0 * co,
        100.0 * co_m,
        100.0 * counter,
        100.0 * counter_m
    ));
    assert_eq!(pa.phi_s, pb.phi_s);
    let (far, pc) = change(&load("fig3c.conf")?)?;
    let (far_res, _) = {
        let cfg = load("fig3c.conf")?;
        let p = CavityParams {
            phi_s: 0.0,
            ..params_of(&cfg)?
        };
        let i_p = peak_of(&pulse_of(&cfg)?.0);
        let off = general_steady_state(&p, 0.0).map_err(err)?.transmission();
        let on = general_steady_state(&p, i_p).map_err(err)?.transmission();
        (on / off - 1.0, p)
    };
    pass &= (pc.phi_d - FRAC_PI_2).abs() < 1e-12 && far.abs() < 0.05 && far_res.abs() < 0.05;
    parts.push(format!(
        "phi_d = pi/2: {:+.3}% detuned, {:+.3}% on resonance (< 5%)",
        100.0 * far,
        100.0 * far_res
    ));
    outcome("detuning signs", pass, parts.join("; "))
}

fn mirrored(cfg: &RunConfig) -> Result<RunConfig, String> {
    let mut cfg = cfg.clone();
    let p = params_of(&cfg)?;
    cfg.params = Some(p.with_phases(-p.phi_s, -p.phi_d));
    Ok(cfg)
}

fn scan_calibration() -> Result<Outcome, String> {
    let path = preset("fig2_scan.conf");
    let text = std::fs::read_to_string(&path).map_err(err)?;
    let dir = path.parent().unwrap().to_path_buf();
    let mut results = Vec::new();
    for phi in [0.0, 0.1, -0.1, 0.3, -0.3] {
        let edited = text.replace(
            "scan.phi_d_at_crossing = 0\n",
            &format!("scan.phi_d_at_crossing = {phi}\n"),
        );
        if phi != 0.0 && edited == text {
            return Err("fig2_scan preset lacks `scan.phi_d_at_crossing = 0`".into());
        }
        let cfg = parse_config_in(&edited, &dir).map_err(err)?;
        let Scenario::Scan(spec) = &cfg.scenario else {
            return Err("fig2_scan preset has the wrong scenario".into());
        };
        let trace = simulate_scan(&params_of(&cfg)?, spec).map_err(err)?;
        results.push((phi, scan_asymmetry(&trace).map_err(err)?));
    }
    let threshold_ok = results.iter().all(|&(phi, a)| (a < 0.05) == (phi == 0.0));
    let at = |phi: f64| results.iter().find(|(p, _)| *p == phi).unwrap().1;
    let monotone = at(0.0) < at(0.1).min(at(-0.1)) && at(0.1) < at(0.3) && at(-0.1) < at(-0.3);
    let listing: Vec<String> = results
        .iter()
        .map(|(phi, a)| format!("{phi:+.1}: {a:.4}"))
        .collect();
    outcome(
        "scan asymmetry",
        threshold_ok && monotone,
        format!(
            "asymmetry by phi_d at crossing [{}]; < 0.05 iff phi_d = 0: {threshold_ok}, monotone in |phi_d|: {monotone}",
            listing.join(", ")
        ),
    )
}

fn conservation() -> Result<Outcome, String> {
    let mut rng = StdRng::seed_from_u64(7);
    let k = frequency_ratio(&CavityParams::doubly_resonant());
    let c = |rng: &mut StdRng| Complex64::new(rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0));

    let mut manley = 0.0f64;
    let mut unitarity = 0.0f64;
    for _ in 0..10_000 {
        let (s, d) = (c(&mut rng), c(&mut rng));
        let g = MixingStrength::new(rng.gen_range(0.0..20.0)).unwrap();
        let (s2, d2) = crystal_mix(s, d, g, k);
        let before = s.norm_sqr() + k * k * d.norm_sqr();
        let after = s2.norm_sqr() + k * k * d2.norm_sqr();
        manley = manley.max((after - before).abs() / before);

        let r_s: f64 = rng.gen_range(0.0..1.0);
        let p = CavityParams {
            r_s,
            t_s: (1.0 - r_s * r_s).sqrt(),
            ..CavityParams::doubly_resonant()
        };
        let state = IntracavityState {
            a_s: c(&mut rng),
            b_d: c(&mut rng),
        };
        let a_i = c(&mut rng);
        let out =
            in_couple(&state, a_i, &p).norm_sqr() + reflected_field(&state, a_i, &p).norm_sqr();
        let inp = state.a_s.norm_sqr() + a_i.norm_sqr();
        unitarity = unitarity.max((out - inp).abs() / inp);
    }

    // lossless signal path with a trapped DF (pump on) or any DF loss (pump off)
    let mut lossless = 0.0f64;
    for i in 0..1000 {
        let r_s: f64 = rng.gen_range(0.3..0.99);
        let pump_on = i % 2 == 0;
        let p = CavityParams {
            r_s,
            t_s: (1.0 - r_s * r_s).sqrt(),
            eta_s: 1.0,
            rho_d: if pump_on {
                1.0
            } else {
                rng.gen_range(0.0..1.0)
            },
            phi_s: rng.gen_range(-PI..PI),
            phi_d: rng.gen_range(-PI..PI),
            ..CavityParams::doubly_resonant()
        };
        let i_p = if pump_on {
            rng.gen_range(1.0..500.0)
        } else {
            0.0
        };
        let sol = general_steady_state(&p, i_p).map_err(err)?;
        lossless = lossless.max((sol.transmission() + sol.reflection() - 1.0).abs());
    }

    let p = CavityParams {
        t_s: (1.0 - 0.968f64.powi(2)).sqrt(),
        eta_s: 1.0,
        rho_d: 1.0,
        ..CavityParams::doubly_resonant()
    };
    let (pump, duration) = pulse_of(&load("fig2.conf")?)?;
    let trace = simulate_pulse_from(&p, &pump, duration, IntracavityState::ZERO).map_err(err)?;
    let delivered: f64 = trace.rows.iter().map(|r| 1.0 - r.p_t - r.p_r).sum();
    let stored = stored_flux(&p, &trace.final_state) - stored_flux(&p, &trace.initial_state);
    let dynamic = (delivered - stored).abs() / trace.rows.len() as f64;

    outcome(
        "conservation",
        manley <= 1e-12 && unitarity <= 1e-12 && lossless <= 1e-10 && dynamic <= 1e-6,
        format!(
            "Manley-Rowe {manley:.1e} (<= 1e-12), mirror unitarity {unitarity:.1e} (<= 1e-12), \
             lossless |t|^2+|r|^2-1 {lossless:.1e} (<= 1e-10), dynamic energy {dynamic:.1e} (<= 1e-6)"
        ),
    )
}

fn quasi_static() -> Result<Outcome, String> {
    let resonant = params_of(&load("fig2.conf")?)?;
    let lossy = params_of(&load("fig4.conf")?)?;
    let cases = [
        (resonant, 5.0),
        (resonant, 17.0),
        (resonant, 30.0),
        (lossy, 150.0),
    ];
    let mut worst = 0.0f64;
    let mut parts = Vec::new();
    for (p, i_p) in cases {
        let life = mode_lifetime(&p, i_p).max(mode_lifetime(&p, 0.0));
        let width = 80.0 * life;
        let start = 20e-9;
        let pump = PumpWaveform::rectangular(start, width, i_p);
        let trace = simulate_pulse(&p, &pump, start + width + 20e-9).map_err(err)?;
        // central half of the pulse spans 40 lifetimes
        let plateau = trace
            .mean_transmission(start + 0.25 * width, start + 0.75 * width)
            .ok_or("empty plateau")?;
        let steady = general_steady_state(&p, i_p).map_err(err)?.transmission();
        let dev = (plateau / steady - 1.0).abs();
        worst = worst.max(dev);
        parts.push(format!("{i_p} W: {:.1e}", dev));
    }
    outcome(
        "quasi-static link",
        worst <= 5e-3,
        format!(
            "plateau vs steady state over 40 lifetimes [{}] (<= 0.5%)",
            parts.join(", ")
        ),
    )
}

fn main() -> ExitCode {
    let checks: [(&str, Check); 10] = [
        ("calibration fidelity", calibration_fidelity),
        ("solver equivalence", solver_equivalence),
        ("lossy-DF contrast", lossy_regime),
        ("doubly resonant contrast", doubly_resonant),
        ("over-rotation point", over_rotation),
        ("saturation shape", saturation_shape),
        ("detuning signs", detuning_signs),
        ("scan asymmetry", scan_calibration),
        ("conservation", conservation),
        ("quasi-static link", quasi_static),
    ];
    let mut unexpected = 0;
    let mut red = 0;
    for (name, check) in checks {
        let result = check().unwrap_or_else(|e| Outcome {
            name,
            pass: false,
            detail: format!("error: {e}"),
        });
        let known = KNOWN_RED.iter().find(|(n, _)| *n == result.name);
        println!(
            "{} {}: {}",
            if result.pass { "PASS" } else { "FAIL" },
            result.name,
            result.detail
        );
        match (result.pass, known) {
            (false, Some((_, why))) => {
                red += 1;
                println!("     known: {why}");
            }
            (false, None) => unexpected += 1,
            (true, Some(_)) => println!("     note: listed as known red but passed"),
            (true, None) => {}
        }
    }
    println!(
        "acceptance: {} passed, {red} known red, {unexpected} unexpected failures",
        checks.len() - red - unexpected
    );
    if unexpected == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
