//! Synthetic records in NSL-KDD text format, for tests, benches and smoke
//! runs when the real files are not available.

use std::fs;
use std::io::Write;
use std::path::Path;

use rand::Rng;

use crate::data::{AttackClass, NSL_KDD_FEATURES};
use crate::error::{Error, Result};
use crate::seed;

const PROTOCOLS: [&str; 3] = ["tcp", "udp", "icmp"];
const SERVICES: [&str; 10] = [
    "http", "private", "smtp", "ftp_data", "domain_u", "ecr_i", "telnet", "ftp", "other", "eco_i",
];
const FLAGS: [&str; 5] = ["SF", "S0", "REJ", "RSTR", "SH"];

/// Class mix and shift of a generated split.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynthProfile {
    /// Weights of normal, DoS, Probe, U2R, R2L.
    pub class_weights: [f64; 5],
    /// Share of rows whose service is absent from the training vocabulary.
    pub unseen_service: f64,
    /// Standard deviation of the per-feature noise.
    pub noise: f64,
}

impl SynthProfile {
    pub fn train() -> Self {
        SynthProfile {
            class_weights: [67_343.0, 45_927.0, 11_656.0, 52.0, 995.0],
            unseen_service: 0.0,
            noise: 0.35,
        }
    }

    /// Heavier on the rare attack families, like the published test split.
    pub fn test() -> Self {
        SynthProfile {
            class_weights: [9_711.0, 7_458.0, 2_421.0, 200.0, 2_754.0],
            unseen_service: 0.01,
            noise: 0.45,
        }
    }
}

fn attack_name(class: AttackClass, rng: &mut seed::Rng) -> &'static str {
    let names: &[&str] = match class {
        AttackClass::Normal => &["normal"],
        AttackClass::DoS => &["neptune", "smurf", "back", "teardrop"],
        AttackClass::Probe => &["satan", "ipsweep", "portsweep", "nmap"],
        AttackClass::U2R => &["buffer_overflow", "rootkit"],
        AttackClass::R2L => &["guess_passwd", "warezmaster", "imap"],
    };
    names[rng.gen_range(0..names.len())]
}

fn pick(weights: &[f64], rng: &mut seed::Rng) -> usize {
    let total: f64 = weights.iter().sum();
    let mut u = rng.gen_range(0.0..total);
    for (i, w) in weights.iter().enumerate() {
        if u < *w {
            return i;
        }
        u -= w;
    }
    weights.len() - 1
}

fn gauss(rng: &mut seed::Rng) -> f64 {
    let u1: f64 = rng.gen_range(f64::EPSILON..1.0);
    let u2: f64 = rng.gen_range(0.0..1.0);
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

/// Per-class centre of each numeric feature in [0,1], fixed for all seeds.
fn centres() -> Vec<[f64; 5]> {
    let mut rng = seed::stream(0, "synth-centres");
    (0..NSL_KDD_FEATURES.len())
        .map(|f| {
            let informative = f % 3 != 2;
            let base: f64 = rng.gen_range(0.1..0.9);
            let mut c = [base; 5];
            if informative {
                for v in c.iter_mut().skip(1) {
                    *v = (base + rng.gen_range(-0.5..0.5)).clamp(0.0, 1.0);
                }
            }
            c
        })
        .collect()
}

fn format_value(name: &str, unit: f64) -> String {
    let u = unit.clamp(0.0, 1.0);
    if name.ends_with("_rate") {
        format!("{u:.2}")
    } else if name.ends_with("bytes") || name == "duration" {
        format!("{}", (u * 12.0).exp2().floor() as u64 - 1)
    } else if matches!(
        name,
        "land" | "logged_in" | "root_shell" | "is_host_login" | "is_guest_login"
    ) {
        format!("{}", u8::from(u > 0.5))
    } else if name == "num_outbound_cmds" {
        "0".into()
    } else {
        format!("{}", (u * 255.0).round() as u64)
    }
}

/// Writes `n` records (42 fields plus difficulty) to `out`.
pub fn write_synthetic<W: Write>(
    out: &mut W,
    n: usize,
    profile: &SynthProfile,
    seed: u64,
) -> Result<()> {
    let centres = centres();
    let mut rng = seed::stream(seed, "synth-rows");
    let io = |e| Error::io("<synthetic>", e);
    for _ in 0..n {
        let class = AttackClass::ALL[pick(&profile.class_weights, &mut rng)];
        let c = class as usize;
        let mut fields: Vec<String> = Vec::with_capacity(NSL_KDD_FEATURES.len() + 2);
        for (f, name) in NSL_KDD_FEATURES.iter().enumerate() {
            let v = match *name {
                "protocol_type" => {
                    let w: &[f64] = match class {
                        AttackClass::Normal => &[0.8, 0.15, 0.05],
                        AttackClass::DoS => &[0.6, 0.05, 0.35],
                        AttackClass::Probe => &[0.5, 0.2, 0.3],
                        _ => &[0.95, 0.04, 0.01],
                    };
                    PROTOCOLS[pick(w, &mut rng)].to_string()
                }
                "service" => {
                    if rng.gen_bool(profile.unseen_service) {
                        "urp_i".to_string()
                    } else {
                        let mut w = [1.0; SERVICES.len()];
                        w[(c * 3) % SERVICES.len()] += 6.0;
                        w[(c * 3 + 1) % SERVICES.len()] += 3.0;
                        SERVICES[pick(&w, &mut rng)].to_string()
                    }
                }
                "flag" => {
                    let w: &[f64] = match class {
                        AttackClass::Normal => &[0.9, 0.02, 0.04, 0.02, 0.02],
                        AttackClass::DoS => &[0.3, 0.5, 0.15, 0.03, 0.02],
                        AttackClass::Probe => &[0.35, 0.15, 0.3, 0.1, 0.1],
                        _ => &[0.85, 0.03, 0.04, 0.06, 0.02],
                    };
                    FLAGS[pick(w, &mut rng)].to_string()
                }
                _ => format_value(name, centres[f][c] + profile.noise * gauss(&mut rng)),
            };
            fields.push(v);
        }
        fields.push(attack_name(class, &mut rng).to_string());
        fields.push(rng.gen_range(1..=21u32).to_string());
        writeln!(out, "{}", fields.join(",")).map_err(io)?;
    }
    Ok(())
}

/// Writes a training and a test file of the given sizes.
pub fn write_synthetic_pair(
    train: &Path,
    test: &Path,
    n_train: usize,
    n_test: usize,
    seed: u64,
) -> Result<()> {
    for (path, n, profile, purpose) in [
        (train, n_train, SynthProfile::train(), "synth-train"),
        (test, n_test, SynthProfile::test(), "synth-test"),
    ] {
        if let Some(dir) = path.parent() {
            fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
        let mut buf = Vec::new();
        write_synthetic(&mut buf, n, &profile, seed::derive(seed, purpose))?;
        fs::write(path, buf).map_err(|e| Error::io(path, e))?;
    }
    Ok(())
}
