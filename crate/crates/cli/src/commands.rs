//! One function per subcommand. Each writes its outputs, then its manifest.

use std::fmt;
use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;
use std::time::{Duration, Instant};

use anyhow::{anyhow, bail, Context, Result};
use indexmap::IndexMap;
use serde::Serialize;
use serde_json::json;

use mask_advisor::advisor::{self, provider_inputs, with_pool, Ipf, PhaseTimings};
use mask_advisor::data::{load_dataset, Summary};
use mask_advisor::evaluation::{
    generate_synthetic, run_benchmark, summarize as summarize_records, total_timings, BenchmarkSettings, EvalRecord,
    SynthSpec,
};
use mask_advisor::masking::{
    check_unique_ids, generate_configurations, inverse_image, materialize_masked, parse_configurations,
    GeneratorPolicy,
};
use mask_advisor::{
    AttributeDomain, AttributeInput, Case, ConfigInputs, Dataset, JointDistribution, LoadOptions,
    MaskingConfiguration, Measure,
};

use crate::manifest::{manifest_path, sibling, IpfManifest, RunManifest};
use crate::{AdviseArgs, DataArgs, EvaluateArgs, GenConfigsArgs, GenSynthArgs, MaskArgs, SummarizeArgs};

/// A mistake in how the command was invoked rather than in the data.
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

/// Masked joints keyed by configuration id, then attribute.
type MaskedJointBundle = IndexMap<String, IndexMap<String, JointDistribution>>;

fn load(args: &DataArgs) -> Result<Dataset> {
    let file = File::open(&args.data).with_context(|| format!("cannot open {}", args.data.display()))?;
    let options = LoadOptions { bins: args.bins };
    load_dataset(BufReader::new(file), &args.label, &options).with_context(|| format!("reading {}", args.data.display()))
}

fn load_configs(path: &Path) -> Result<Vec<MaskingConfiguration>> {
    let text = fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    let configs = parse_configurations(&text).with_context(|| format!("parsing {}", path.display()))?;
    check_unique_ids(&configs)?;
    Ok(configs)
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let file = File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
    serde_json::from_reader(BufReader::new(file)).with_context(|| format!("parsing {}", path.display()))
}

/// Writes `bytes` in one go, creating parent directories as needed.
fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
    }
    fs::write(path, bytes).with_context(|| format!("cannot write {}", path.display()))
}

fn pretty_json<T: Serialize>(value: &T) -> Result<Vec<u8>> {
    let mut out = serde_json::to_vec_pretty(value)?;
    out.push(b'\n');
    Ok(out)
}

fn write_manifest(out: &Path, manifest: RunManifest) -> Result<()> {
    write_file(&manifest_path(out), &pretty_json(&manifest)?)
}

fn ms(d: Duration) -> f64 {
    d.as_secs_f64() * 1e3
}

fn report_phases(t: &PhaseTimings) {
    eprintln!(
        "phase timings: masking {:.1} ms, reconstruction {:.1} ms, utility {:.1} ms, total {:.1} ms",
        ms(t.masking),
        ms(t.reconstruction),
        ms(t.utility),
        ms(t.total())
    );
}

fn data_manifest(command: &'static str, data: &DataArgs) -> RunManifest {
    let mut m = RunManifest::new(command).input("data", &data.data);
    m.label = Some(data.label.clone());
    if let Some(bins) = data.bins {
        m.parameters["bins"] = json!(bins);
    }
    m
}

pub fn summarize(args: SummarizeArgs) -> Result<()> {
    let d = load(&args.data)?;
    let summary = Summary::of_dataset(&d)?.to_json()?;
    write_file(&args.out, &pretty_json(&summary)?)?;
    write_manifest(&args.out, data_manifest("summarize", &args.data).output(&args.out))
}

pub fn advise(args: AdviseArgs) -> Result<()> {
    let configs = load_configs(&args.configs)?;
    let measure = Measure::from(args.measure);
    let case = Case::from(args.case);
    let settings = args.ipf.settings();
    settings.validate()?;

    let mut manifest = RunManifest::new("advise").input("configs", &args.configs);
    let (inputs, masking) = match (&args.data, &args.masked_joints) {
        (Some(data), None) => {
            let data_args = DataArgs {
                data: data.clone(),
                label: args.label.clone().expect("clap requires --label with --data"),
                bins: args.bins,
            };
            let d = load(&data_args)?;
            let (inputs, masking) = provider_inputs(&d, &configs, case, args.jobs)?;
            manifest = manifest.input("data", data);
            manifest.label = Some(data_args.label);
            if let Some(bins) = args.bins {
                manifest.parameters["bins"] = json!(bins);
            }
            if let Some(path) = &args.emit_masked_joints {
                write_file(path, &pretty_json(&bundle_of(&inputs))?)?;
                manifest = manifest.output(path);
            }
            (inputs, masking)
        }
        (None, Some(joints)) => {
            manifest = manifest.input("masked-joints", joints);
            if let Some(p) = &args.summaries {
                manifest = manifest.input("summaries", p);
            }
            if let Some(p) = &args.domains {
                manifest = manifest.input("domains", p);
            }
            let inputs = middleware_inputs(&configs, joints, args.summaries.as_deref(), args.domains.as_deref(), case)?;
            (inputs, Duration::ZERO)
        }
        _ => unreachable!("clap enforces exactly one of --data and --masked-joints"),
    };

    let (report, mut timings) = advisor::advise_with(&inputs, measure, case, &settings, args.jobs, &Ipf)?;
    timings.masking = masking;
    write_file(&args.out, &pretty_json(&report)?)?;

    manifest.measure = Some(measure);
    manifest.case = Some(case);
    manifest.seed = Some(settings.rounding_seed);
    manifest.ipf = Some(IpfManifest::from(&settings));
    write_manifest(&args.out, manifest.output(&args.out))?;

    report_phases(&timings);
    print!("{}", report.render_table());
    Ok(())
}

fn bundle_of(inputs: &[ConfigInputs]) -> MaskedJointBundle {
    inputs
        .iter()
        .map(|c| {
            let joints = c
                .attributes
                .iter()
                .map(|a| (a.attribute.clone(), a.masked_joint.clone()))
                .collect();
            (c.config_id.clone(), joints)
        })
        .collect()
}

/// Assembles advisor inputs from masked joints, with original domains from
/// `--domains` (preferred) or the summaries' histograms.
fn middleware_inputs(
    configs: &[MaskingConfiguration],
    joints_path: &Path,
    summaries_path: Option<&Path>,
    domains_path: Option<&Path>,
    case: Case,
) -> Result<Vec<ConfigInputs>> {
    let mut bundle: MaskedJointBundle = read_json(joints_path)?;
    let summary = summaries_path
        .map(|p| -> Result<Summary> {
            let value: serde_json::Value = read_json(p)?;
            Summary::from_json(&value).with_context(|| format!("parsing {}", p.display()))
        })
        .transpose()?;
    let domains: Option<IndexMap<String, Vec<String>>> = domains_path.map(read_json).transpose()?;
    if case == Case::WithMarginals && summary.is_none() {
        return Err(UsageError("--case with-1d in middleware mode needs --summaries".into()).into());
    }

    configs
        .iter()
        .map(|config| {
            let joints = bundle
                .shift_remove(&config.id)
                .ok_or_else(|| anyhow!("no masked joints for configuration `{}`", config.id))?;
            let names: Vec<&str> = joints.keys().map(String::as_str).collect();
            config.validate_for(&names, None)?;
            let attributes = joints
                .into_iter()
                .map(|(attribute, masked_joint)| {
                    let domain = match (&domains, &summary) {
                        (Some(d), _) if d.contains_key(&attribute) => {
                            AttributeDomain::new(attribute.as_str(), d[&attribute].clone())?
                        }
                        (_, Some(s)) if s.get(&attribute).is_some() => s.get(&attribute).unwrap().domain().clone(),
                        _ => bail!("attribute `{attribute}`: its original domain is in neither --domains nor --summaries"),
                    };
                    let f = config.function(&attribute).expect("validated above");
                    let inverse = inverse_image(f, &domain)
                        .with_context(|| format!("configuration `{}`, attribute `{attribute}`", config.id))?;
                    let marginal = match case {
                        Case::WithMarginals => Some(
                            summary
                                .as_ref()
                                .and_then(|s| s.get(&attribute))
                                .ok_or_else(|| anyhow!("summaries lack a histogram for `{attribute}`"))?
                                .clone(),
                        ),
                        Case::NoMarginals => None,
                    };
                    Ok(AttributeInput {
                        attribute,
                        masked_joint,
                        inverse,
                        marginal,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(ConfigInputs {
                config_id: config.id.clone(),
                attributes,
            })
        })
        .collect()
}

pub fn mask(args: MaskArgs) -> Result<()> {
    let configs = load_configs(&args.configs)?;
    let config = match &args.config_id {
        Some(id) => configs
            .iter()
            .find(|c| &c.id == id)
            .ok_or_else(|| UsageError(format!("no configuration `{id}` in {}", args.configs.display())))?,
        None if configs.len() == 1 => &configs[0],
        None => {
            return Err(UsageError(format!(
                "{} holds {} configurations; pick one with --config-id",
                args.configs.display(),
                configs.len()
            ))
            .into())
        }
    };
    let d = load(&args.data)?;
    let masked = materialize_masked(&d, config)?;

    // Keep the input's column order.
    let header: Vec<String> = csv_header(&args.data.data)?;
    let mut out = Vec::new();
    masked.write_csv_ordered(&mut out, &header)?;
    write_file(&args.out, &out)?;

    let mut manifest = data_manifest("mask", &args.data).input("configs", &args.configs);
    manifest.parameters["config-id"] = json!(config.id);
    write_manifest(&args.out, manifest.output(&args.out))
}

fn csv_header(path: &Path) -> Result<Vec<String>> {
    let file = File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(file);
    Ok(reader.headers()?.iter().map(str::to_string).collect())
}

pub fn gen_configs(args: GenConfigsArgs) -> Result<()> {
    let d = load(&args.data)?;
    let policy: GeneratorPolicy = match &args.policy {
        Some(p) => read_json(p)?,
        None => GeneratorPolicy::default(),
    };
    let configs = generate_configurations(&d, args.k, args.seed, &policy)?;
    write_file(&args.out, &pretty_json(&configs)?)?;

    let mut manifest = data_manifest("gen-configs", &args.data);
    if let Some(p) = &args.policy {
        manifest = manifest.input("policy", p);
    }
    manifest.seed = Some(args.seed);
    manifest.parameters["k"] = json!(args.k);
    manifest.parameters["policy"] = serde_json::to_value(&policy)?;
    write_manifest(&args.out, manifest.output(&args.out))
}

pub fn gen_synth(args: GenSynthArgs) -> Result<()> {
    let spec = SynthSpec {
        rows: args.rows,
        attributes: args.attrs,
        domain_size: args.domain_size,
        label_classes: args.classes,
        gamma: args.gamma,
        seed: args.seed,
    };
    spec.validate()?;
    let start = Instant::now();
    let d = with_pool(args.jobs, || generate_synthetic(&spec))??;
    let generation = start.elapsed();

    let start = Instant::now();
    let file = File::create(&args.out).with_context(|| format!("cannot write {}", args.out.display()))?;
    let mut w = BufWriter::new(file);
    d.write_csv(&mut w)?;
    w.flush()?;
    let writing = start.elapsed();
    eprintln!(
        "phase timings: generation {:.1} ms, writing {:.1} ms, total {:.1} ms",
        ms(generation),
        ms(writing),
        ms(generation + writing)
    );

    let mut manifest = RunManifest::new("gen-synth");
    manifest.seed = Some(args.seed);
    manifest.parameters = serde_json::to_value(spec)?;
    write_manifest(&args.out, manifest.output(&args.out))
}

pub fn evaluate(args: EvaluateArgs) -> Result<()> {
    let d = load(&args.data)?;
    let configs = load_configs(&args.configs)?;
    let settings = BenchmarkSettings {
        methods: args.methods.iter().map(|&m| m.into()).collect(),
        measures: args.measures.iter().map(|&m| m.into()).collect(),
        ipf: args.ipf.settings(),
        seed: args.ipf.seed,
        jobs: args.jobs,
    };
    let records = run_benchmark(&d, &configs, &settings)?;

    let mut ndjson = Vec::new();
    for r in &records {
        serde_json::to_writer(&mut ndjson, r)?;
        ndjson.push(b'\n');
    }
    write_file(&args.out, &ndjson)?;
    let summary_path = sibling(&args.out, "summary.json");
    write_file(&summary_path, &pretty_json(&summarize_records(&records))?)?;

    let mut manifest = data_manifest("evaluate", &args.data)
        .input("configs", &args.configs)
        .output(&args.out)
        .output(&summary_path);
    if let Some(path) = &args.csv {
        write_file(path, &records_csv(&records, &settings.measures)?)?;
        manifest = manifest.output(path);
    }
    let timings = total_timings(&records);
    if let Some(path) = &args.timings {
        let t = json!({
            "masking-ms": ms(timings.masking),
            "reconstruction-ms": ms(timings.reconstruction),
            "utility-ms": ms(timings.utility),
        });
        write_file(path, &pretty_json(&t)?)?;
        manifest = manifest.output(path);
    }
    manifest.seed = Some(settings.seed);
    manifest.ipf = Some(IpfManifest::from(&settings.ipf));
    manifest.parameters["methods"] = serde_json::to_value(&settings.methods)?;
    manifest.parameters["measures"] = serde_json::to_value(&settings.measures)?;
    write_manifest(&args.out, manifest)?;
    report_phases(&timings);
    Ok(())
}

fn records_csv(records: &[EvalRecord], measures: &[Measure]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header: Vec<String> = ["config_id", "attribute", "method", "tvd", "iterations", "residual"]
        .map(String::from)
        .to_vec();
    header.extend(measures.iter().map(|m| format!("deviation_{}", m.flag())));
    w.write_record(&header)?;
    for r in records {
        let mut row = vec![
            r.config_id.clone(),
            r.attribute.clone(),
            r.method.to_string(),
            r.tvd.to_string(),
            r.iterations.to_string(),
            r.residual.map_or(String::new(), |x| x.to_string()),
        ];
        row.extend(measures.iter().map(|m| r.deviations[m].to_string()));
        w.write_record(&row)?;
    }
    w.into_inner().map_err(|e| anyhow!("writing CSV: {e}"))
}
