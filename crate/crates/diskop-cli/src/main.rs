//! diskop: a command-line toolkit for equivariant framed little-disk
//! operads. Scenes are JSON documents holding a block structure, a group and
//! named domains, configurations and trees; subcommands validate membership,
//! compose and divide elements, build index partitions and triangle
//! decompositions, evaluate tensor trees, normalize critical elements, run
//! shrink flows, render SVG figures, and drive the randomized verification
//! harness.

use clap::{Args, Parser, Subcommand, ValueEnum};
use diskop_core::scene::config_json;
use diskop_core::svg::fmt_scalar;
use diskop_core::{
    core_normal_form, criticality, divides, entry_time, flow_apply, intersection_data,
    parse_scene, render_svg, separation_partition, tree_evaluate, tree_validate,
    triangle_decomposition, validate, Config, Error as CoreError, FlowKind, MembershipLevel,
    NumericMode, Scalar, Scene, StructureMap,
};
use std::io::Write as _;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "diskop",
    version,
    about = "Equivariant framed little-disk operads: validation, divisibility, tensor trees, flows"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct SceneArgs {
    /// Path to the scene JSON document.
    #[arg(long)]
    scene: std::path::PathBuf,
    /// Override the comparison tolerance (float mode).
    #[arg(long)]
    tolerance: Option<f64>,
    /// Emit machine-readable JSON instead of a table.
    #[arg(long)]
    json: bool,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum LevelArg {
    Ambient,
    Star,
    Separated,
}

impl From<LevelArg> for MembershipLevel {
    fn from(level: LevelArg) -> Self {
        match level {
            LevelArg::Ambient => MembershipLevel::Ambient,
            LevelArg::Star => MembershipLevel::Star,
            LevelArg::Separated => MembershipLevel::Separated,
        }
    }
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum FlowArg {
    ShrinkLeft,
    ShrinkRight,
    ShrinkRightProduct,
}

impl From<FlowArg> for FlowKind {
    fn from(kind: FlowArg) -> Self {
        match kind {
            FlowArg::ShrinkLeft => FlowKind::ShrinkLeft,
            FlowArg::ShrinkRight => FlowKind::ShrinkRight,
            FlowArg::ShrinkRightProduct => FlowKind::ShrinkRightProduct,
        }
    }
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum ModeArg {
    Exact,
    Float,
}

#[derive(Subcommand)]
enum Command {
    /// Check a configuration at a membership level.
    Validate {
        #[command(flatten)]
        scene: SceneArgs,
        #[arg(long)]
        config: String,
        #[arg(long, value_enum)]
        level: LevelArg,
    },
    /// Operadic composition x ∘_α (q^j).
    Compose {
        #[command(flatten)]
        scene: SceneArgs,
        #[arg(long)]
        x: String,
        /// 1-based values of α, one per slot of the result, e.g. "1,1,2".
        #[arg(long)]
        alpha: String,
        /// Quotient config names, one per slot of x, e.g. "q1,q2".
        #[arg(long)]
        quotients: String,
    },
    /// Geometric divisibility test with quotient construction.
    Divide {
        #[command(flatten)]
        scene: SceneArgs,
        #[arg(long)]
        x: String,
        #[arg(long)]
        y: String,
        /// Subgroup element labels, comma separated (the domain must be
        /// invariant under them).
        #[arg(long)]
        subgroup: Option<String>,
    },
    /// Intersection pairs and the L/R index partitions of a pair.
    Partition {
        #[command(flatten)]
        scene: SceneArgs,
        #[arg(long)]
        x: String,
        #[arg(long)]
        y: String,
    },
    /// Triangle decomposition of a corresponding separated pair.
    Triangles {
        #[command(flatten)]
        scene: SceneArgs,
        #[arg(long)]
        x: String,
        #[arg(long)]
        y: String,
    },
    /// Evaluate a tensor tree into the product operad.
    TreeEval {
        #[command(flatten)]
        scene: SceneArgs,
        #[arg(long)]
        tree: String,
    },
    /// Criticality witness and additive-core normal form of a product
    /// configuration.
    CoreNormalize {
        #[command(flatten)]
        scene: SceneArgs,
        #[arg(long)]
        config: String,
        /// Coarse blocks in the first factor (defaults to the scene's
        /// factorSplit).
        #[arg(long)]
        split: Option<usize>,
    },
    /// Apply a shrink flow at a time t ∈ [0, 1).
    Flow {
        #[command(flatten)]
        scene: SceneArgs,
        #[arg(long)]
        config: String,
        #[arg(long, value_enum)]
        kind: FlowArg,
        /// Flow time, rational ("1/4") or decimal.
        #[arg(long)]
        t: String,
    },
    /// Closed-form minimal entry time into a target pair of balls, or the
    /// windowed search for a tree's critical entry time (--tree).
    EntryTime {
        #[command(flatten)]
        scene: SceneArgs,
        #[arg(long, conflicts_with = "tree", required_unless_present = "tree")]
        config: Option<String>,
        /// Tree whose evaluation is searched for criticality under the
        /// product shrink (ignores --kind/--inner/--outer).
        #[arg(long)]
        tree: Option<String>,
        #[arg(long, value_enum, required_unless_present = "tree")]
        kind: Option<FlowArg>,
        /// Name of the inner ball B.
        #[arg(long, required_unless_present = "tree")]
        inner: Option<String>,
        /// Name of the outer ball B'.
        #[arg(long, required_unless_present = "tree")]
        outer: Option<String>,
    },
    /// Render configurations as an SVG of a 2D projection.
    Render {
        #[command(flatten)]
        scene: SceneArgs,
        /// Config names, comma separated (empty renders the domain alone).
        #[arg(long, default_value = "")]
        configs: String,
        /// 1-based projection axes, e.g. "1,2" (must share a coarse block).
        #[arg(long, default_value = "1,2")]
        axes: String,
        /// Also draw the dashed separation enlargements.
        #[arg(long)]
        enlarge: bool,
        /// Output path (stdout when omitted).
        #[arg(long)]
        out: Option<std::path::PathBuf>,
    },
    /// Run the randomized lemma-verification harness.
    Verify {
        /// Suites to run, comma separated, or "all".
        #[arg(long, default_value = "all")]
        suite: String,
        #[arg(long, default_value_t = 100)]
        trials: u64,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// Numeric mode (also via DISKOP_NUMERIC_MODE; flag wins).
        #[arg(long, value_enum)]
        mode: Option<ModeArg>,
        #[arg(long)]
        tolerance: Option<f64>,
        /// Include per-suite timings (breaks byte-for-byte determinism).
        #[arg(long)]
        timings: bool,
        #[arg(long)]
        json: bool,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e);
            ExitCode::from(1)
        }
    }
}

fn load_scene(args: &SceneArgs) -> Result<Scene, CoreError> {
    let bytes = std::fs::read(&args.scene)
        .map_err(|e| CoreError::Invalid(format!("cannot read {}: {}", args.scene.display(), e)))?;
    let mut scene = parse_scene(&bytes)?;
    if let Ok(mode) = std::env::var("DISKOP_NUMERIC_MODE") {
        let mode = match mode.as_str() {
            "exact" => NumericMode::Exact,
            "float" => NumericMode::Float,
            other => {
                return Err(CoreError::Invalid(format!(
                    "DISKOP_NUMERIC_MODE must be exact or float, found {:?}",
                    other
                )))
            }
        };
        scene = scene.convert(mode)?;
    }
    if let Some(tol) = args.tolerance {
        scene.params.tol = tol;
    }
    Ok(scene)
}

fn parse_name_list(text: &str) -> Vec<String> {
    text.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(str::to_string)
        .collect()
}

fn parse_scalar_arg(text: &str, mode: NumericMode) -> Result<Scalar, CoreError> {
    if let Ok(q) = diskop_core::scalar::parse_rational(text) {
        return Ok(Scalar::from_rational(q, mode));
    }
    text.parse::<f64>()
        .map(|x| Scalar::Float(x).convert(mode))
        .map_err(|_| CoreError::Invalid(format!("cannot parse scalar {:?}", text)))
}

fn print_json(value: &serde_json::Value) {
    println!("{}", serde_json::to_string_pretty(value).expect("valid JSON"));
}

fn config_summary(c: &Config) -> Vec<String> {
    c.maps()
        .iter()
        .map(|m| {
            let scales: Vec<String> = m.scales().iter().map(fmt_scalar).collect();
            let translation: Vec<String> = m.translation().iter().map(fmt_scalar).collect();
            format!(
                "scales [{}] translation [{}]",
                scales.join(", "),
                translation.join(", ")
            )
        })
        .collect()
}

fn run(command: Command) -> Result<(), CoreError> {
    match command {
        Command::Validate {
            scene,
            config,
            level,
        } => {
            let s = load_scene(&scene)?;
            let cfg = s.config(&config)?;
            let report = validate(cfg, level.into(), &s.params);
            if scene.json {
                print_json(&serde_json::json!({
                    "config": config,
                    "level": format!("{:?}", MembershipLevel::from(level)).to_lowercase(),
                    "valid": report.valid,
                    "violations": report.violations,
                }));
            } else {
                println!(
                    "{} at {:?}: {}",
                    config,
                    MembershipLevel::from(level),
                    if report.valid { "valid" } else { "INVALID" }
                );
                for v in &report.violations {
                    println!(
                        "  violation: g={} i={} j={:?} predicate={:?}",
                        v.group_element,
                        v.i + 1,
                        v.j.map(|j| j + 1),
                        v.predicate
                    );
                }
            }
            if report.valid {
                Ok(())
            } else {
                Err(CoreError::Invalid(format!(
                    "{} is not valid at level {:?}",
                    config,
                    MembershipLevel::from(level)
                )))
            }
        }
        Command::Compose {
            scene,
            x,
            alpha,
            quotients,
        } => {
            let s = load_scene(&scene)?;
            let xc = s.config(&x)?;
            let alpha_values: Vec<usize> = alpha
                .split(',')
                .map(|v| {
                    v.trim()
                        .parse::<usize>()
                        .ok()
                        .and_then(|n| n.checked_sub(1))
                        .ok_or_else(|| CoreError::Invalid(format!("bad alpha entry {:?}", v)))
                })
                .collect::<Result<_, _>>()?;
            let alpha = StructureMap::new(xc.arity(), alpha_values)?;
            let q_names = parse_name_list(&quotients);
            let qs: Vec<Config> = q_names
                .iter()
                .map(|n| s.config(n).cloned())
                .collect::<Result<_, _>>()?;
            let result = diskop_core::operad_compose(xc, &alpha, &qs)?;
            if scene.json {
                print_json(&serde_json::json!({
                    "arity": result.arity(),
                    "maps": config_json(&result),
                }));
            } else {
                println!("composed config of arity {}:", result.arity());
                for (i, line) in config_summary(&result).iter().enumerate() {
                    println!("  [{}] {}", i + 1, line);
                }
            }
            Ok(())
        }
        Command::Divide {
            scene,
            x,
            y,
            subgroup,
        } => {
            let s = load_scene(&scene)?;
            let xc = s.config(&x)?;
            let yc = s.config(&y)?;
            let members: Option<Vec<usize>> = match &subgroup {
                None => None,
                Some(labels) => Some(
                    parse_name_list(labels)
                        .iter()
                        .map(|l| {
                            s.group.element_index(l).ok_or_else(|| {
                                CoreError::Invalid(format!("unknown group element {:?}", l))
                            })
                        })
                        .collect::<Result<_, _>>()?,
                ),
            };
            let division = divides(xc, yc, members.as_deref(), &s.params)?;
            match division {
                Some(div) => {
                    let alpha_1based: Vec<usize> =
                        div.alpha.values().iter().map(|j| j + 1).collect();
                    if scene.json {
                        print_json(&serde_json::json!({
                            "divides": true,
                            "alpha": alpha_1based,
                            "quotients": div
                                .quotients
                                .iter()
                                .map(config_json)
                                .collect::<Vec<_>>(),
                        }));
                    } else {
                        println!("{} divides {}", x, y);
                        println!("  alpha = {:?}", alpha_1based);
                        for (j, q) in div.quotients.iter().enumerate() {
                            println!("  q^{} (arity {}):", j + 1, q.arity());
                            for line in config_summary(q) {
                                println!("    {}", line);
                            }
                        }
                    }
                }
                None => {
                    if scene.json {
                        print_json(&serde_json::json!({ "divides": false }));
                    } else {
                        println!("{} does not divide {}", x, y);
                    }
                }
            }
            Ok(())
        }
        Command::Partition { scene, x, y } => {
            let s = load_scene(&scene)?;
            let xc = s.config(&x)?;
            let yc = s.config(&y)?;
            let data = intersection_data(xc, yc, &s.params)?;
            let partition = separation_partition(xc, yc, &s.params)?;
            let one = |v: &[usize]| -> Vec<usize> { v.iter().map(|i| i + 1).collect() };
            let mut pairs = Vec::new();
            for i in 0..xc.arity() {
                for j in 0..yc.arity() {
                    if data.relation[i][j] {
                        pairs.push(vec![i + 1, j + 1]);
                    }
                }
            }
            if scene.json {
                print_json(&serde_json::json!({
                    "pairs": pairs,
                    "l1": one(&partition.l1),
                    "l2": one(&partition.l2),
                    "r1": one(&partition.r1),
                    "r2": one(&partition.r2),
                }));
            } else {
                println!("intersection pairs: {:?}", pairs);
                println!("L1 = {:?}", one(&partition.l1));
                println!("L2 = {:?}", one(&partition.l2));
                println!("R1 = {:?}", one(&partition.r1));
                println!("R2 = {:?}", one(&partition.r2));
            }
            Ok(())
        }
        Command::Triangles { scene, x, y } => {
            let s = load_scene(&scene)?;
            let xc = s.config(&x)?;
            let yc = s.config(&y)?;
            let t = triangle_decomposition(xc, yc, &s.params)?;
            if scene.json {
                print_json(&serde_json::json!({
                    "right": config_json(&t.right),
                    "left": config_json(&t.left),
                    "down": config_json(&t.down),
                    "sigmaX": t.sigma_x.image().iter().map(|i| i + 1).collect::<Vec<_>>(),
                    "sigmaY": t.sigma_y.image().iter().map(|i| i + 1).collect::<Vec<_>>(),
                    "mu": t.mu.iter().map(config_json).collect::<Vec<_>>(),
                    "nu": t.nu.iter().map(config_json).collect::<Vec<_>>(),
                }));
            } else {
                println!("triangle decomposition of ({}, {}):", x, y);
                println!("  x |> y (arity {}):", t.right.arity());
                for line in config_summary(&t.right) {
                    println!("    {}", line);
                }
                println!("  x <| y (arity {}):", t.left.arity());
                for line in config_summary(&t.left) {
                    println!("    {}", line);
                }
                println!("  x \\/ y (arity {}):", t.down.arity());
                for line in config_summary(&t.down) {
                    println!("    {}", line);
                }
                println!("  all bubble-transfer equations verified");
            }
            Ok(())
        }
        Command::TreeEval { scene, tree } => {
            let s = load_scene(&scene)?;
            let t = s.tree(&tree)?;
            let flags = tree_validate(t, &s.params);
            let evaluated = tree_evaluate(t, &s.params)?;
            if scene.json {
                print_json(&serde_json::json!({
                    "flags": flags,
                    "arity": evaluated.arity(),
                    "maps": config_json(&evaluated),
                }));
            } else {
                println!(
                    "tree {}: wellFormed={} reduced={} proper={} core={}",
                    tree, flags.well_formed, flags.reduced, flags.proper, flags.core
                );
                println!("evaluation (arity {}):", evaluated.arity());
                for (i, line) in config_summary(&evaluated).iter().enumerate() {
                    println!("  [{}] {}", i + 1, line);
                }
            }
            Ok(())
        }
        Command::CoreNormalize {
            scene,
            config,
            split,
        } => {
            let s = load_scene(&scene)?;
            let cfg = s.config(&config)?;
            let v_blocks = split.or(s.factor_split).ok_or_else(|| {
                CoreError::Invalid(
                    "need --split or a factorSplit in the scene's block structure".into(),
                )
            })?;
            let witness = criticality(cfg, v_blocks, &s.params)?;
            let form = core_normal_form(cfg, &witness, &s.params)?;
            if scene.json {
                let grid: Vec<Vec<serde_json::Value>> = form
                    .factors
                    .iter()
                    .map(|row| {
                        row.iter()
                            .map(|cell| match cell {
                                None => serde_json::Value::Null,
                                Some((c, d)) => serde_json::json!({
                                    "c": config_json(c),
                                    "d": config_json(d),
                                }),
                            })
                            .collect()
                    })
                    .collect();
                print_json(&serde_json::json!({
                    "sigma": form.sigma.image().iter().map(|i| i + 1).collect::<Vec<_>>(),
                    "a": config_json(&form.a),
                    "b": config_json(&form.b),
                    "grid": grid,
                    "partitionV": witness.partition_v.iter()
                        .map(|b| b.iter().map(|k| k + 1).collect::<Vec<_>>())
                        .collect::<Vec<_>>(),
                    "partitionW": witness.partition_w.iter()
                        .map(|b| b.iter().map(|k| k + 1).collect::<Vec<_>>())
                        .collect::<Vec<_>>(),
                }));
            } else {
                println!(
                    "core normal form: {} rows x {} cols, arity {}",
                    form.rows(),
                    form.cols(),
                    form.arity()
                );
                println!(
                    "  sigma = {:?}",
                    form.sigma.image().iter().map(|i| i + 1).collect::<Vec<_>>()
                );
                println!("  separator a:");
                for line in config_summary(&form.a) {
                    println!("    {}", line);
                }
                println!("  separator b:");
                for line in config_summary(&form.b) {
                    println!("    {}", line);
                }
            }
            Ok(())
        }
        Command::Flow {
            scene,
            config,
            kind,
            t,
        } => {
            let s = load_scene(&scene)?;
            let cfg = s.config(&config)?;
            let time = parse_scalar_arg(&t, s.mode)?;
            let flowed = flow_apply(cfg, kind.into(), &time)?;
            if scene.json {
                print_json(&serde_json::json!({
                    "t": fmt_scalar(&time),
                    "maps": config_json(&flowed),
                }));
            } else {
                println!("flowed config at t = {}:", fmt_scalar(&time));
                for (i, line) in config_summary(&flowed).iter().enumerate() {
                    println!("  [{}] {}", i + 1, line);
                }
            }
            Ok(())
        }
        Command::EntryTime {
            scene,
            config,
            tree,
            kind,
            inner,
            outer,
        } => {
            let s = load_scene(&scene)?;
            if let Some(tree_name) = tree {
                let t = s.tree(&tree_name)?;
                let (time, witness) = diskop_core::core_entry_time(t, &s.params)?;
                if scene.json {
                    print_json(&serde_json::json!({
                        "t": fmt_scalar(&time),
                        "partitionV": witness.partition_v.iter()
                            .map(|b| b.iter().map(|k| k + 1).collect::<Vec<_>>())
                            .collect::<Vec<_>>(),
                        "partitionW": witness.partition_w.iter()
                            .map(|b| b.iter().map(|k| k + 1).collect::<Vec<_>>())
                            .collect::<Vec<_>>(),
                    }));
                } else {
                    println!("critical entry time t = {}", fmt_scalar(&time));
                    println!("  witness blocks: {} in V, {} in W",
                        witness.partition_v.len(), witness.partition_w.len());
                }
                return Ok(());
            }
            let config = config.expect("clap enforces --config without --tree");
            let kind = kind.expect("clap enforces --kind without --tree");
            let inner = inner.expect("clap enforces --inner without --tree");
            let outer = outer.expect("clap enforces --outer without --tree");
            let cfg = s.config(&config)?;
            let inner_ball = s.domain(&inner)?.ball.clone();
            let outer_ball = s.domain(&outer)?.ball.clone();
            let report = entry_time(cfg, kind.into(), &inner_ball, &outer_ball, &s.params)?;
            if scene.json {
                print_json(&serde_json::json!({
                    "t": fmt_scalar(&report.t),
                    "binding": report.binding,
                    "target": report.target,
                }));
            } else {
                println!("entry time t = {}", fmt_scalar(&report.t));
                match &report.binding {
                    Some(b) => println!(
                        "  binding constraint: g={} i={} j={:?} block={}",
                        b.group_element,
                        b.i + 1,
                        b.j.map(|j| j + 1),
                        b.block + 1
                    ),
                    None => println!("  already inside the target"),
                }
            }
            Ok(())
        }
        Command::Render {
            scene,
            configs,
            axes,
            enlarge,
            out,
        } => {
            let s = load_scene(&scene)?;
            let names = parse_name_list(&configs);
            let axis_values: Vec<usize> = axes
                .split(',')
                .map(|v| {
                    v.trim()
                        .parse::<usize>()
                        .ok()
                        .and_then(|n| n.checked_sub(1))
                        .ok_or_else(|| CoreError::Invalid(format!("bad axis {:?}", v)))
                })
                .collect::<Result<_, _>>()?;
            if axis_values.len() != 2 {
                return Err(CoreError::Invalid("expected exactly two axes".into()));
            }
            let svg = render_svg(&s, &names, (axis_values[0], axis_values[1]), enlarge)?;
            match out {
                Some(path) => std::fs::write(&path, &svg).map_err(|e| {
                    CoreError::Invalid(format!("cannot write {}: {}", path.display(), e))
                })?,
                None => {
                    std::io::stdout()
                        .write_all(&svg)
                        .map_err(|e| CoreError::Invalid(e.to_string()))?;
                }
            }
            Ok(())
        }
        Command::Verify {
            suite,
            trials,
            seed,
            mode,
            tolerance,
            timings,
            json,
        } => {
            let mode = match mode {
                Some(ModeArg::Exact) => NumericMode::Exact,
                Some(ModeArg::Float) => NumericMode::Float,
                None => match std::env::var("DISKOP_NUMERIC_MODE").as_deref() {
                    Ok("float") => NumericMode::Float,
                    Err(_) => NumericMode::Exact,
                    Ok("exact") => NumericMode::Exact,
                    Ok(other) => {
                        return Err(CoreError::Invalid(format!(
                            "DISKOP_NUMERIC_MODE must be exact or float, found {:?}",
                            other
                        )))
                    }
                },
            };
            let mut params = diskop_core::Params::default();
            if let Some(tol) = tolerance {
                params.tol = tol;
            }
            let selection = parse_name_list(&suite);
            let report = diskop_core::verify(&selection, seed, trials, mode, &params, timings)?;
            if json {
                print_json(&serde_json::to_value(&report).expect("report serializes"));
            } else {
                println!(
                    "verify: seed {} trials {} mode {}",
                    report.seed, report.trials, report.mode
                );
                for s in &report.suites {
                    let status = if s.failures == 0 { "ok" } else { "FAIL" };
                    let timing = s
                        .elapsed_ms
                        .map(|ms| format!(" ({} ms)", ms))
                        .unwrap_or_default();
                    println!(
                        "  {:<16} {:>6} trials  {:>4} failures  {}{}",
                        s.name, s.trials, s.failures, status, timing
                    );
                    if let Some(ce) = &s.first_counterexample {
                        println!(
                            "    first counterexample (trial {}): {}",
                            ce.trial, ce.message
                        );
                        if let Some(scene) = &ce.scene {
                            println!(
                                "    reproducing scene:\n{}",
                                serde_json::to_string_pretty(scene).expect("valid JSON")
                            );
                        }
                    }
                }
            }
            if report.total_failures() == 0 {
                Ok(())
            } else {
                Err(CoreError::Invalid(format!(
                    "{} verification failures",
                    report.total_failures()
                )))
            }
        }
    }
}
