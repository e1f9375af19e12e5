use std::path::{Path, PathBuf};

use fragnet::evalmetrics::{coancestry as coancestry_summary, experiment_grid, predict_network, Averaging, CoancestryField, GridGenerator};
use fragnet::graphstats::io::{apply_mask_text, parse_edge_list, parse_pairs};
use fragnet::graphstats::{emit_edge_list, LabelMap};
use fragnet::models::{NetworkGenerator, Predictor};
use fragnet::prior::{sample_crp, sample_tree};
use fragnet::sampler::io::{parse_diagnostics, parse_samples, write_diagnostics, write_samples};
use fragnet::sampler::mixing::mixing_summary;
use fragnet::sampler::{chain_rng, run_chains, ChainConfig, Diagnostics, Init, ProposalConfig};
use fragnet::{BetaParams, FragTree, GibbsParams, Graph, ModelKind, Structure};

use crate::manifest::{with_suffix, write_file, Manifest};
use crate::{
    CliError, CoancestryArgs, DiagnoseArgs, EvaluateArgs, Field, FitArgs, GridArgs, InitKind, PredictArgs, PriorArgs,
    SimulateArgs,
};

type Result<T> = std::result::Result<T, CliError>;

const STRUCTURE_HEADER: &str = "# fragnet structure v1";

/// Attaches the offending file to library errors.
fn at<T>(path: &Path, r: fragnet::Result<T>) -> Result<T> {
    r.map_err(|e| match CliError::from(e) {
        CliError::Usage(m) => CliError::Usage(format!("{}: {m}", path.display())),
        CliError::Input(m) => CliError::Input(format!("{}: {m}", path.display())),
        inv => inv,
    })
}

fn hyper(p: &PriorArgs) -> Result<(GibbsParams<f64>, BetaParams<f64>)> {
    Ok((GibbsParams::new(p.alpha, p.beta)?, BetaParams::new(p.rho_plus, p.rho_minus)?))
}

fn read_graph(m: &mut Manifest, path: &Path, mask: Option<&Path>, role: &str) -> Result<Graph> {
    let text = m.read(role, path)?;
    let graph = at(path, parse_edge_list(&text))?;
    match mask {
        None => Ok(graph),
        Some(mp) => {
            let mask_text = m.read(&format!("{role}_mask"), mp)?;
            at(mp, apply_mask_text(&graph, &mask_text))
        }
    }
}

fn read_pairs(m: &mut Manifest, path: &Path) -> Result<Vec<(usize, usize)>> {
    let text = m.read("pairs", path)?;
    Ok(at(path, parse_pairs(&text))?.1)
}

fn structure_text(s: &Structure, kind: ModelKind) -> String {
    let mut out = format!("{STRUCTURE_HEADER} model={kind}\ncanonical\t{}\n", s.canonical());
    if let Structure::Tree(t) = s {
        out.push_str(&format!("newick\t{}\n", t.to_newick()));
    }
    out
}

/// Reads a structure file written by `simulate`, or a bare structure: a
/// nested list or Newick tree, or a partition for the blockmodel.
fn parse_structure(kind: ModelKind, text: &str) -> fragnet::Result<Structure> {
    let mut body = None;
    for line in text.lines().map(str::trim).filter(|l| !l.is_empty()) {
        if let Some(rest) = line.strip_prefix("# fragnet ") {
            let mut parts = rest.split_whitespace();
            if parts.next() != Some("structure") {
                return Err(fragnet::Error::Format(format!("not a structure file: {line:?}")));
            }
            if parts.next() != Some("v1") {
                return Err(fragnet::Error::Format(format!("unsupported structure version in {line:?}")));
            }
            continue;
        }
        if line.starts_with('#') || line.starts_with("newick\t") {
            continue;
        }
        body = Some(line.strip_prefix("canonical\t").unwrap_or(line));
        break;
    }
    let body = body.ok_or_else(|| fragnet::Error::Format("no structure found".into()))?;
    if kind.uses_tree() && body.ends_with(';') {
        return Ok(Structure::Tree(FragTree::from_newick(body)?));
    }
    Structure::parse(kind, body)
}

pub fn simulate(a: &SimulateArgs) -> Result<()> {
    let kind: ModelKind = a.model.into();
    let (tau, rho) = hyper(&a.prior)?;
    let mut m = Manifest::new("simulate", a);
    let mut rng = chain_rng(a.seed, 0);
    let structure = match (&a.tree_file, a.n) {
        (Some(p), n) => {
            let text = m.read("tree_file", p)?;
            let s = at(p, parse_structure(kind, &text))?;
            if let Some(n) = n.filter(|&n| n != s.n_vertices()) {
                return Err(CliError::Usage(format!("--n {n} disagrees with the {} vertices of --tree-file", s.n_vertices())));
            }
            s
        }
        (None, Some(n)) => {
            if n < 2 {
                return Err(CliError::Usage("--n must be at least 2".into()));
            }
            if kind.uses_tree() {
                Structure::Tree(sample_tree(n, &tau, &mut rng)?)
            } else {
                Structure::Partition(sample_crp(n, &tau, &mut rng))
            }
        }
        (None, None) => return Err(CliError::Usage("one of --n or --tree-file is required".into())),
    };
    let generator = NetworkGenerator::draw(structure, kind, &rho, &mut rng)?;
    let graph = generator.replicate(&mut rng);
    let p = &a.out_prefix;
    m.write(&with_suffix(p, "edges"), &emit_edge_list(&graph))?;
    m.write(&with_suffix(p, "structure"), &structure_text(&generator.structure, kind))?;
    m.write(&with_suffix(p, "generator"), &generator.to_text())?;
    for k in 0..a.replicates {
        let g = generator.replicate(&mut rng);
        m.write(&with_suffix(p, &format!("rep{k}.edges")), &emit_edge_list(&g))?;
    }
    m.finish(p)?;
    Ok(())
}

pub fn fit(a: &FitArgs) -> Result<()> {
    let kind: ModelKind = a.model.into();
    let (tau, rho) = hyper(&a.prior)?;
    let mut m = Manifest::new("fit", a);
    let graph = read_graph(&mut m, &a.graph, a.mask.as_deref(), "graph")?;
    let init = match &a.init_file {
        Some(p) => {
            let text = m.read("init_file", p)?;
            Init::Given(at(p, parse_structure(kind, &text))?)
        }
        None => match a.init {
            InitKind::Prior => Init::Prior,
            InitKind::Flat => Init::Flat,
        },
    };
    let config = ChainConfig {
        iterations: a.iters,
        burn_in: a.burnin,
        thin: a.thin,
        proposal: ProposalConfig {
            local_move_prob: a.local_prob,
            local_radius: a.radius,
            type1_prob: a.type1_prob,
        },
        seed: a.seed,
        kind,
        tau,
        rho,
        init,
        verify_every: a.verify_every,
    };
    config.validate()?;
    let outputs = match run_chains(&graph, &config, a.chains) {
        Ok(o) => o,
        Err(e @ fragnet::Error::Invariant(_)) => {
            let path = with_suffix(&a.out_prefix, "state-dump.txt");
            let dump = format!("# fragnet state-dump v1\nerror\t{e}\nconfig\t{config:?}\n");
            write_file(&path, &dump)?;
            return Err(CliError::Invariant { msg: e.to_string(), dump: Some(path) });
        }
        Err(e) => return Err(e.into()),
    };
    for (c, out) in outputs.iter().enumerate() {
        m.write(&with_suffix(&a.out_prefix, &format!("chain{c}.samples")), &write_samples(kind, &out.samples))?;
        m.write(&with_suffix(&a.out_prefix, &format!("chain{c}.diag")), &write_diagnostics(&out.diagnostics))?;
    }
    m.finish(&a.out_prefix)?;
    Ok(())
}

fn read_samples(m: &mut Manifest, path: &Path) -> Result<(ModelKind, Vec<fragnet::PosteriorSample>)> {
    let text = m.read("samples", path)?;
    let (kind, samples) = at(path, parse_samples(&text))?;
    if samples.is_empty() {
        return Err(CliError::Input(format!("{}: no posterior samples", path.display())));
    }
    Ok((kind, samples))
}

pub fn predict(a: &PredictArgs) -> Result<()> {
    let rho = BetaParams::new(a.rho_plus, a.rho_minus)?;
    let mut m = Manifest::new("predict", a);
    let (kind, samples) = read_samples(&mut m, &a.samples)?;
    let train = read_graph(&mut m, &a.train_graph, a.mask.as_deref(), "train_graph")?;
    let pairs = match &a.pairs {
        Some(p) => read_pairs(&mut m, p)?,
        None => train.masked_pairs(),
    };
    if pairs.is_empty() {
        return Err(CliError::Usage("no pairs to predict: give --pairs or a non-empty --mask".into()));
    }
    let mut sums = vec![0.0; pairs.len()];
    for s in &samples {
        let pred = Predictor::new(&train, &s.structure, kind, rho)?;
        for (acc, &(i, j)) in sums.iter_mut().zip(&pairs) {
            *acc += pred.prob(i, j)?;
        }
    }
    let mut out = String::from("# fragnet predictions v1\ni\tj\tprob\n");
    for (&(i, j), s) in pairs.iter().zip(&sums) {
        out.push_str(&format!("{i}\t{j}\t{}\n", s / samples.len() as f64));
    }
    m.write(&with_suffix(&a.out_prefix, "predictions"), &out)?;
    m.finish(&a.out_prefix)?;
    Ok(())
}

pub fn evaluate(a: &EvaluateArgs) -> Result<()> {
    let rho = BetaParams::new(a.rho_plus, a.rho_minus)?;
    let mut m = Manifest::new("evaluate", a);
    let (kind, samples) = read_samples(&mut m, &a.samples)?;
    let train = read_graph(&mut m, &a.train_graph, a.mask.as_deref(), "train_graph")?;
    let target = read_graph(&mut m, &a.target_graph, a.target_mask.as_deref(), "target_graph")?;
    if train.n() != target.n() {
        return Err(CliError::Input(format!(
            "training graph has {} vertices, target has {}",
            train.n(),
            target.n()
        )));
    }
    let pairs = a.pairs.as_deref().map(|p| read_pairs(&mut m, p)).transpose()?;
    let averaging = if a.pooled_probability { Averaging::PooledProbability } else { Averaging::PerSample };
    let report = predict_network(&samples, &train, &target, kind, &rho, pairs.as_deref(), averaging)?;
    m.write(&with_suffix(&a.out_prefix, "prediction"), &report.summary_text())?;
    if a.dump_pairs {
        m.write(&with_suffix(&a.out_prefix, "pairs"), &report.pairs_text())?;
    }
    m.finish(&a.out_prefix)?;
    Ok(())
}

fn rate_text(r: Option<f64>) -> String {
    r.map_or_else(|| "NA".to_string(), |r| r.to_string())
}

pub fn diagnose(a: &DiagnoseArgs) -> Result<()> {
    let mut m = Manifest::new("diagnose", a);
    let mut diags: Vec<Diagnostics> = Vec::with_capacity(a.diagnostics.len());
    for (c, p) in a.diagnostics.iter().enumerate() {
        let text = m.read(&format!("diagnostics{c}"), p)?;
        diags.push(at(p, parse_diagnostics(&text))?);
    }
    if diags.is_empty() {
        return Err(CliError::Usage("no diagnostics files given".into()));
    }
    let mut rates = String::from("# fragnet rates v1\nchain\tclass\tproposed\taccepted\tsame_state\trate\n");
    let mut trace = String::from("# fragnet trace v1\nchain\titeration\tlog_joint\n");
    for (c, d) in diags.iter().enumerate() {
        let mut classes = d.counters.clone();
        if d.kind.uses_tree() {
            classes.push(d.local());
            classes.push(d.global());
        }
        for k in &classes {
            rates.push_str(&format!(
                "{c}\t{}\t{}\t{}\t{}\t{}\n",
                k.name,
                k.proposed,
                k.accepted,
                k.same_state,
                rate_text(k.acceptance_rate())
            ));
        }
        for &(t, v) in &d.trace {
            trace.push_str(&format!("{c}\t{t}\t{v}\n"));
        }
    }
    let mixing = at(&a.diagnostics[0], mixing_summary(&diags))?;
    m.write(&with_suffix(&a.out_prefix, "rates"), &rates)?;
    m.write(&with_suffix(&a.out_prefix, "trace"), &trace)?;
    m.write(&with_suffix(&a.out_prefix, "mixing"), &mixing.to_text())?;
    m.finish(&a.out_prefix)?;
    Ok(())
}

pub fn grid(a: &GridArgs) -> Result<()> {
    let (tau, rho) = hyper(&a.prior)?;
    let mut m = Manifest::new("grid", a);
    let mut generators = Vec::with_capacity(a.generators.len());
    for spec in &a.generators {
        let (name, path) = spec
            .split_once('=')
            .filter(|(n, p)| !n.is_empty() && !p.is_empty())
            .ok_or_else(|| CliError::Usage(format!("--generator expects NAME=PATH, got {spec:?}")))?;
        if generators.iter().any(|g: &GridGenerator| g.name == name) {
            return Err(CliError::Usage(format!("generator name {name:?} given twice")));
        }
        let path = PathBuf::from(path);
        let text = m.read(&format!("generator:{name}"), &path)?;
        let generator = at(&path, NetworkGenerator::parse(&text))?;
        generators.push(GridGenerator { name: name.to_string(), generator });
    }
    let burn_in = a.burnin.unwrap_or(a.iters / 2);
    let thin = a.thin.unwrap_or_else(|| (a.iters.saturating_sub(burn_in) / 200).max(1));
    let config = ChainConfig {
        iterations: a.iters,
        burn_in,
        thin,
        proposal: ProposalConfig {
            local_move_prob: a.local_prob,
            local_radius: a.radius,
            ..ProposalConfig::default()
        },
        seed: a.seed,
        tau,
        rho,
        ..ChainConfig::default()
    };
    let fits: Vec<ModelKind> = a.fits.iter().map(|&f| f.into()).collect();
    let table = experiment_grid(&generators, &fits, &config, a.replicates, a.seed)?;
    m.write(&with_suffix(&a.out_prefix, "grid"), &table.to_text())?;
    m.finish(&a.out_prefix)?;
    Ok(())
}

pub fn coancestry(a: &CoancestryArgs) -> Result<()> {
    let mut m = Manifest::new("coancestry", a);
    let (_, samples) = read_samples(&mut m, &a.samples)?;
    let labels = match &a.labels {
        Some(p) => {
            let text = m.read("labels", p)?;
            at(p, LabelMap::parse(&text))?
        }
        None => LabelMap::default(),
    };
    let summary = coancestry_summary(&samples, samples[0].structure.n_vertices())?;
    let field = match a.field {
        Field::MeanDepth => CoancestryField::MeanDepth,
        Field::BelowRoot => CoancestryField::BelowRoot,
    };
    let text = summary.matrix_text(field, &|v| labels.name(v));
    m.write(&with_suffix(&a.out_prefix, "coancestry"), &text)?;
    m.finish(&a.out_prefix)?;
    Ok(())
}
