use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use drleak::attack::{run_experiment, AttackReport, CellPlan, CellResult, ExperimentSpec, Partition};
use drleak::datasets::{write_pgm, Dataset};
use drleak::defense::{defense_eval, write_curves_csv, DefenseSetup, DivergenceCurve, PIXEL_SIGMA_SCHEDULE};
use drleak::numerics::{child_seed, SeededRng};
use drleak::reconnet::{DecoderKind, NetConfig};
use drleak::reducers::{fit, Method, ReducerConfig};
use drleak::shadow::build_shadow_set;
use rayon::prelude::*;

use crate::data::load_dataset;
use crate::error::CliError;
use crate::manifest::write_manifest;
use crate::settings::Settings;

const DEFAULT_PUBLIC_SIZE: usize = 300;
const DEFAULT_KNOWN_SIZE: usize = 9;

fn seed(s: &Settings) -> Result<u64, CliError> {
    s.parsed_or("experiment.seed", 0)
}

fn dataset(s: &Settings) -> Result<Dataset, CliError> {
    let input = s
        .get("data.input")
        .ok_or_else(|| CliError::Usage("no dataset given (use --input or data.input)".into()))?;
    load_dataset(input, s.parsed("data.limit")?)
}

fn parse_method(name: &str) -> Result<Method, CliError> {
    name.parse::<Method>().map_err(|_| {
        CliError::Usage(format!(
            "unknown method '{name}' (expected one of pca, srp, mds, isomap, tsne, umap)"
        ))
    })
}

fn reducer_template(s: &Settings, method: Method) -> Result<ReducerConfig, CliError> {
    let mut cfg = ReducerConfig::new(method, 0);
    cfg.k_neighbors = s.parsed("reducer.k_neighbors")?;
    cfg.perplexity = s.parsed("reducer.perplexity")?;
    cfg.min_dist = s.parsed_or("reducer.min_dist", cfg.min_dist)?;
    cfg.max_iters = s.parsed("reducer.max_iters")?;
    cfg.learning_rate = s.parsed("reducer.learning_rate")?;
    Ok(cfg)
}

fn single_method(s: &Settings) -> Result<Method, CliError> {
    parse_method(
        s.get("reducer.method")
            .ok_or_else(|| CliError::Usage("no method given (use --method)".into()))?,
    )
}

fn net_config(s: &Settings, data: &Dataset) -> Result<NetConfig, CliError> {
    let mut cfg = NetConfig::new(2, data.dim());
    for (k, v) in s.section("net") {
        cfg.set(k, v)?;
    }
    if cfg.decoder_kind == DecoderKind::ConvT && cfg.out_shape.is_none() {
        cfg.out_shape = data.shape;
    }
    Ok(cfg)
}

fn experiment_spec(
    s: &Settings,
    data: &Dataset,
    default_methods: &str,
    default_repeats: usize,
) -> Result<ExperimentSpec, CliError> {
    let methods = s
        .get("experiment.methods")
        .unwrap_or(default_methods)
        .split(',')
        .map(str::trim)
        .filter(|m| !m.is_empty())
        .map(parse_method)
        .collect::<Result<Vec<_>, _>>()?;
    let sizes = s
        .list("experiment.known_sizes")?
        .unwrap_or_else(|| vec![DEFAULT_KNOWN_SIZE]);
    let mut spec = ExperimentSpec::new(
        methods,
        sizes,
        s.parsed_or("experiment.repeats", default_repeats)?,
        s.parsed_or("experiment.public_size", DEFAULT_PUBLIC_SIZE)?,
        seed(s)?,
    );
    spec.train_fraction = s.parsed_or("experiment.train_fraction", spec.train_fraction)?;
    spec.val_fraction = s.parsed_or("experiment.val_fraction", spec.val_fraction)?;
    spec.reducer = reducer_template(s, Method::Pca)?;
    spec.net = net_config(s, data)?;
    spec.keep_reconstructions = s.parsed_or("output.keep_reconstructions", false)?;
    spec.validate(data.len())?;
    Ok(spec)
}

fn output_dir(s: &Settings) -> Result<PathBuf, CliError> {
    let dir = PathBuf::from(
        s.get("output.dir")
            .ok_or_else(|| CliError::Usage("no output directory given (use --out or output.dir)".into()))?,
    );
    fs::create_dir_all(&dir).map_err(|e| CliError::io(&dir, e))?;
    Ok(dir)
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| CliError::io(parent, e))?;
    }
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::io(path, e))
}

fn finish(mut w: BufWriter<File>, path: &Path) -> Result<(), CliError> {
    w.flush().map_err(|e| CliError::io(path, e))
}

/// Writes `bytes` produced by `f` to `dir/name` and records the name.
fn emit(
    dir: &Path,
    name: &str,
    outputs: &mut Vec<String>,
    f: impl FnOnce(&mut BufWriter<File>) -> drleak::Result<()>,
) -> Result<(), CliError> {
    let path = dir.join(name);
    let mut w = create(&path)?;
    f(&mut w)?;
    finish(w, &path)?;
    outputs.push(name.to_string());
    Ok(())
}

pub fn embed(s: &Settings) -> Result<(), CliError> {
    let data = dataset(s)?;
    let method = single_method(s)?;
    let seed = seed(s)?;
    let cfg = reducer_template(s, method)?.with_seed(seed);
    let start = Instant::now();
    let emb = fit(&data.data, &cfg)?;
    let elapsed = start.elapsed().as_secs_f64();
    let summary = format!(
        "method={method} seed={seed} rows={} wall_time_s={elapsed:.3}",
        data.len()
    );
    match s.get("embed.out") {
        Some(out) => {
            let path = PathBuf::from(out);
            let mut w = create(&path)?;
            emb.write_csv(&mut w).map_err(|e| CliError::io(&path, e))?;
            finish(w, &path)?;
            println!("{summary}");
        }
        None => {
            emb.write_csv(io::stdout().lock())
                .map_err(|e| CliError::io(Path::new("<stdout>"), e))?;
            eprintln!("{summary}");
        }
    }
    Ok(())
}

pub fn shadow(s: &Settings) -> Result<(), CliError> {
    let data = dataset(s)?;
    let method = single_method(s)?;
    let seed = seed(s)?;
    let known_size: usize = s.parsed_or("shadow.known_size", DEFAULT_KNOWN_SIZE)?;
    let public_size: usize = s.parsed_or("shadow.public_size", DEFAULT_PUBLIC_SIZE)?;
    let out = PathBuf::from(
        s.get("shadow.out")
            .ok_or_else(|| CliError::Usage("no output path given (use --out)".into()))?,
    );
    if known_size == 0 || public_size == 0 || data.len() < known_size + public_size {
        return Err(CliError::Core(drleak::Error::Validation(format!(
            "need {public_size} public + {known_size} known rows, dataset has {}",
            data.len()
        ))));
    }
    let mut order: Vec<usize> = (0..data.len()).collect();
    SeededRng::new(child_seed(seed, 0)).shuffle(&mut order);
    let public = data.data.select_rows(&order[..public_size]);
    let known = data.data.select_rows(&order[public_size..public_size + known_size]);
    let start = Instant::now();
    let set = build_shadow_set(&known, &public, &reducer_template(s, method)?, child_seed(seed, 1))?;
    let mut w = create(&out)?;
    set.save(&mut w)?;
    finish(w, &out)?;
    if let Some(csv) = s.get("shadow.csv") {
        let path = PathBuf::from(csv);
        let mut w = create(&path)?;
        set.write_csv(&mut w)?;
        finish(w, &path)?;
    }
    println!(
        "method={method} seed={seed} records={} n={} d={} wall_time_s={:.3}",
        set.len(),
        set.n_points,
        set.dim,
        start.elapsed().as_secs_f64()
    );
    Ok(())
}

fn cell_name(c: &CellResult) -> String {
    format!("{}_k{}_r{}", c.method.name(), c.known_size, c.repeat)
}

pub fn attack(s: &Settings) -> Result<(), CliError> {
    let data = dataset(s)?;
    let spec = experiment_spec(s, &data, "pca,srp,mds,isomap,tsne,umap", 5)?;
    let dir = output_dir(s)?;
    let pgm = s.parsed_or("output.pgm", false)?;
    let report = run_experiment(&data.data, &spec)?;
    let mut outputs = Vec::new();
    for c in &report.cells {
        let name = format!("cells/{}.json", cell_name(c));
        let text = serde_json::to_string_pretty(c).expect("cell serializes") + "\n";
        emit(&dir, &name, &mut outputs, |w| Ok(w.write_all(text.as_bytes())?))?;
        if let Some(recon) = &c.reconstructions {
            let name = format!("reconstructions/{}.f32", cell_name(c));
            emit(&dir, &name, &mut outputs, |w| {
                drleak::attack::write_f32_tensor(recon, w)
            })?;
            if let (true, Some((h, w))) = (pgm, data.shape) {
                for (i, row) in recon.row_iter().enumerate() {
                    let name = format!("reconstructions/{}_{i:03}.pgm", cell_name(c));
                    emit(&dir, &name, &mut outputs, |out| write_pgm(row, h, w, out))?;
                }
            }
        }
    }
    if let (true, Some((h, w))) = (pgm && spec.keep_reconstructions, data.shape) {
        let partition = Partition::new(data.len(), &spec);
        for (i, &r) in partition.test.iter().enumerate() {
            let name = format!("reconstructions/truth_{i:03}.pgm");
            emit(&dir, &name, &mut outputs, |out| write_pgm(data.data.row(r), h, w, out))?;
        }
    }
    let json = report.to_json() + "\n";
    emit(&dir, "report.json", &mut outputs, |w| Ok(w.write_all(json.as_bytes())?))?;
    emit(&dir, "report.csv", &mut outputs, |w| report.write_csv(w))?;
    emit(&dir, "aggregate.csv", &mut outputs, |w| report.write_aggregate_csv(w))?;
    let grid = report.grid_table();
    emit(&dir, "grid.csv", &mut outputs, |w| Ok(w.write_all(grid.as_bytes())?))?;
    write_manifest(&dir, "attack", s, spec.seed, &outputs)?;
    print!("{grid}");
    Ok(())
}

pub fn defend(s: &Settings) -> Result<(), CliError> {
    let data = dataset(s)?;
    let spec = experiment_spec(s, &data, "pca,isomap", 3)?;
    let dir = output_dir(s)?;
    let sigmas: Vec<f64> = s
        .list("defense.sigmas")?
        .unwrap_or_else(|| PIXEL_SIGMA_SCHEDULE.to_vec());
    let scale = match s.get("defense.sigma_scale").unwrap_or("pixel") {
        "pixel" => 255.0,
        "data" => 1.0,
        other => {
            return Err(CliError::Usage(format!(
                "sigma_scale must be pixel or data, got '{other}'"
            )))
        }
    };
    let sigmas: Vec<f64> = sigmas.iter().map(|v| v / scale).collect();
    let clip = s.parsed_or("defense.clip", false)?;
    let noise_seed = s.parsed_or("defense.noise_seed", child_seed(spec.seed, 3))?;
    let partition = Partition::new(data.len(), &spec);
    let curves = (0..spec.cell_count())
        .into_par_iter()
        .map(|i| -> Result<DivergenceCurve, CliError> {
            let plan: CellPlan = spec.cell(i);
            let cell = drleak::attack::train_cell(&data.data, &spec, &partition, plan)?;
            let mut setup = DefenseSetup::from_cell(&cell, &spec.reducer, child_seed(noise_seed, plan.repeat as u64));
            setup.clamp = clip.then_some((0.0, 1.0));
            Ok(defense_eval(Some(&cell.model), &setup, &sigmas)?)
        })
        .collect::<Result<Vec<_>, _>>()?;
    let mut outputs = Vec::new();
    emit(&dir, "divergence.csv", &mut outputs, |w| write_curves_csv(&curves, w))?;
    write_manifest(&dir, "defend", s, spec.seed, &outputs)?;
    for c in &curves {
        let vals: Vec<String> = c.points.iter().map(|p| format!("{:.6}", p.divergence_eq12)).collect();
        println!(
            "{} k={} seed={}: {}",
            c.method.name(),
            c.known_size,
            c.seed,
            vals.join(" ")
        );
    }
    Ok(())
}

pub fn report(dir: &Path, out: Option<&Path>) -> Result<(), CliError> {
    let cells_dir = dir.join("cells");
    let mut paths: Vec<PathBuf> = fs::read_dir(&cells_dir)
        .map_err(|e| CliError::io(&cells_dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(CliError::Usage(format!("no cell files in {}", cells_dir.display())));
    }
    let mut report = AttackReport::default();
    for p in &paths {
        let text = fs::read_to_string(p).map_err(|e| CliError::io(p, e))?;
        let cell: CellResult = serde_json::from_str(&text).map_err(|e| {
            CliError::Core(drleak::Error::Format {
                offset: 0,
                message: format!("{}: {e}", p.display()),
            })
        })?;
        report.cells.push(cell);
    }
    let grid = report.grid_table();
    let path = out.map_or_else(|| dir.join("grid.csv"), Path::to_path_buf);
    fs::write(&path, &grid).map_err(|e| CliError::io(&path, e))?;
    print!("{grid}");
    Ok(())
}
