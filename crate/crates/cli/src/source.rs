use serde_json::{json, Value};

use qbd2d_core::efficiency::{ModelFamily, ScanRate};
use qbd2d_core::model::io::read_model;
use qbd2d_core::QbdModel;

use crate::args::{Builtin, ModelArgs, Scan};

/// Parameters of a built-in family after defaults are filled in.
#[derive(Debug, Clone, Copy)]
struct Params {
    l1: f64,
    l2: f64,
    mu1: f64,
    mu2: f64,
    g1: f64,
    g2: f64,
}

fn params(builtin: Builtin, args: &ModelArgs) -> Params {
    let (l1, l2) = match builtin {
        Builtin::PrioritySetup | Builtin::PrioritySetupMapph => (0.1, 0.5),
        Builtin::AdditionalServer => (1.5, 1.2),
        Builtin::IndependentPair => (0.3, 0.4),
    };
    Params {
        l1: args.l1.unwrap_or(l1),
        l2: args.l2.unwrap_or(l2),
        mu1: args.mu1.unwrap_or(1.0),
        mu2: args.mu2.unwrap_or(1.0),
        g1: args.g1.unwrap_or(2.0),
        g2: args.g2.unwrap_or(2.0),
    }
}

/// A resolved model together with what produced it.
pub struct Source {
    pub model: QbdModel,
    pub params: Value,
}

impl Source {
    pub fn name(&self) -> &str {
        self.model.name()
    }
}

fn describe(builtin: Builtin, p: Params, args: &ModelArgs) -> Value {
    let mut v = json!({ "l1": p.l1, "l2": p.l2, "mu1": p.mu1, "mu2": p.mu2 });
    if matches!(builtin, Builtin::PrioritySetup | Builtin::PrioritySetupMapph) {
        v["g1"] = json!(p.g1);
        v["g2"] = json!(p.g2);
    }
    if builtin == Builtin::PrioritySetupMapph {
        v["erlang"] = json!(args.erlang);
    }
    v
}

pub fn resolve(args: &ModelArgs) -> Result<Source, String> {
    if let Some(path) = &args.model {
        let model = read_model(path).map_err(|e| e.to_string())?;
        return Ok(Source { model, params: json!({ "file": path.display().to_string() }) });
    }
    let builtin = args.builtin.expect("clap requires --builtin or --model");
    let p = params(builtin, args);
    let family = family_for(builtin, p, args, ScanRate::Lambda2);
    let model = family.model(p.l2).map_err(|e| e.to_string())?;
    Ok(Source { model, params: describe(builtin, p, args) })
}

fn family_for(builtin: Builtin, p: Params, args: &ModelArgs, scan: ScanRate) -> ModelFamily {
    let fixed = match scan {
        ScanRate::Lambda1 => p.l2,
        ScanRate::Lambda2 => p.l1,
    };
    match builtin {
        Builtin::PrioritySetup => ModelFamily::priority_setup(scan, fixed, p.mu1, p.mu2, p.g1, p.g2),
        Builtin::PrioritySetupMapph => {
            ModelFamily::priority_setup_mapph(scan, fixed, args.erlang, p.mu1, p.mu2, p.g1, p.g2)
        }
        Builtin::AdditionalServer => ModelFamily::additional_server(scan, fixed, p.mu1, p.mu2),
        Builtin::IndependentPair => ModelFamily::independent_pair(scan, fixed, p.mu1, p.mu2),
    }
}

pub fn scan_rate(scan: Scan) -> ScanRate {
    match scan {
        Scan::L1 => ScanRate::Lambda1,
        Scan::L2 => ScanRate::Lambda2,
    }
}

/// Family for efficiency sweeps; only built-in models are parametric.
pub fn family(args: &ModelArgs, scan: Scan) -> Result<(ModelFamily, Value), String> {
    let Some(builtin) = args.builtin else {
        return Err("efficiency and table need --builtin: a model file has no rate to scan".into());
    };
    let p = params(builtin, args);
    let mut described = describe(builtin, p, args);
    let scanned = match scan {
        Scan::L1 => "l1",
        Scan::L2 => "l2",
    };
    described.as_object_mut().expect("object").remove(scanned);
    described["scan"] = json!(scanned);
    Ok((family_for(builtin, p, args, scan_rate(scan)), described))
}

/// Default fixed-rate grid: nine points spaced 0.1 inside the stable range.
pub fn default_grid(builtin: Option<Builtin>) -> Vec<f64> {
    let first = match builtin {
        Some(Builtin::AdditionalServer) => 1.1,
        _ => 0.1,
    };
    (0..9).map(|i| ((first + 0.1 * i as f64) * 1e12).round() / 1e12).collect()
}
