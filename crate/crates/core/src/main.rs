use std::path::PathBuf;
use std::process::ExitCode;

use clap::{ArgGroup, Args, Parser, Subcommand};

use avprune::io::write_prune_result;
use avprune::pipeline::{run_pipeline_detailed, BundlePaths, PipelineConfig};
use avprune::scoring::ThresholdPolicy;
use avprune::synth::{generate_synthetic, Regime, SynthParams};
use avprune::verify::verify_dir;
use avprune::{Error, Execution};

#[derive(Parser)]
#[command(
    name = "avprune",
    version,
    about = "Audio/video token pruning for omni-modal LLM inputs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Prune one input bundle and write the retained token indices.
    Compress(Box<CompressArgs>),
    /// Generate a seeded synthetic bundle with a truth sidecar.
    Gen(GenArgs),
    /// Check allocator-vs-oracle agreement and planted-signal recovery.
    Verify {
        #[arg(long = "in")]
        input: PathBuf,
    },
}

#[derive(Args)]
#[command(group(ArgGroup::new("audio").required(true).args(["audio_qk", "audio_attn"])))]
struct CompressArgs {
    #[arg(long)]
    video_clip: PathBuf,
    #[arg(long)]
    audio_clip: PathBuf,
    #[arg(long)]
    text_clip: PathBuf,
    #[arg(long)]
    video_emb: PathBuf,
    /// Stacked audio projections, shape [2, N_a, d_k].
    #[arg(long)]
    audio_qk: Option<PathBuf>,
    /// Audio attention weights, shape [N_a, N_a] or [H, N_a, N_a].
    #[arg(long)]
    audio_attn: Option<PathBuf>,
    #[arg(long)]
    groups: PathBuf,
    #[arg(long, default_value_t = avprune::pipeline::DEFAULT_ETA)]
    eta_video: f64,
    #[arg(long, default_value_t = avprune::pipeline::DEFAULT_ETA)]
    eta_audio: f64,
    #[arg(long, default_value_t = 1.0)]
    tau: f64,
    #[arg(long, default_value_t = 1e-6)]
    epsilon: f64,
    #[arg(long, default_value_t = 32)]
    max_iters: usize,
    #[arg(long, default_value_t = 0.5)]
    budget_tol: f64,
    #[arg(long, default_value_t = ThresholdPolicy::default().gap_breakpoint)]
    gap_breakpoint: f64,
    #[arg(long, default_value_t = ThresholdPolicy::default().theta_small)]
    theta_small: f64,
    #[arg(long, default_value_t = ThresholdPolicy::default().theta_large)]
    theta_large: f64,
    #[arg(long, default_value_t = 1)]
    stride: usize,
    #[arg(long, default_value_t = avprune::pipeline::DEFAULT_LOGIT_SCALE)]
    logit_scale: f64,
    #[arg(long, default_value_t = 2)]
    pool_factor: usize,
    /// Evaluate groups on the calling thread only.
    #[arg(long)]
    sequential: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct GenArgs {
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    groups: usize,
    #[arg(long)]
    video_tokens: usize,
    #[arg(long)]
    audio_tokens: usize,
    #[arg(long)]
    dim: usize,
    #[arg(long)]
    regime: Regime,
    #[arg(long)]
    out_dir: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Compress(args) => compress(*args),
        Command::Gen(args) => gen(args),
        Command::Verify { input } => verify(input),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_internal() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}

fn compress(args: CompressArgs) -> Result<ExitCode, Error> {
    let paths = BundlePaths {
        video_clip: args.video_clip,
        audio_clip: args.audio_clip,
        text_clip: args.text_clip,
        video_emb: args.video_emb,
        audio_qk: args.audio_qk,
        audio_attn: args.audio_attn,
    };
    let bundle = paths.load()?;
    let spec = avprune::io::read_group_spec(&args.groups)?;
    let cfg = PipelineConfig {
        eta_video: args.eta_video,
        eta_audio: args.eta_audio,
        policy: ThresholdPolicy {
            gap_breakpoint: args.gap_breakpoint,
            theta_small: args.theta_small,
            theta_large: args.theta_large,
        },
        tau: args.tau,
        epsilon: args.epsilon,
        max_iters: args.max_iters,
        budget_tol: args.budget_tol,
        frame_stride: args.stride,
        logit_scale: args.logit_scale,
        pool_factor: args.pool_factor,
        execution: if args.sequential {
            Execution::Sequential
        } else {
            Execution::default()
        },
    };
    let run = run_pipeline_detailed(&bundle, &spec, &cfg)?;
    write_prune_result(&run.result, &args.out)?;

    let s = run.result.summary();
    println!("strategy {}", run.result.strategy);
    println!("mean_video_score {}", run.scores.mean_video);
    println!("mean_audio_score {}", run.scores.mean_audio);
    println!("tokens_before {}", s.tokens_before);
    println!("tokens_after {}", s.tokens_after);
    println!("retained_ratio_video {:.6}", s.retained_ratio_video);
    println!("retained_ratio_audio {:.6}", s.retained_ratio_audio);
    println!("retained_ratio {:.6}", s.retained_ratio);
    println!("residual_video {:.6}", run.plan.residual_video);
    println!("residual_audio {:.6}", run.plan.residual_audio);
    println!("modeled_speedup {:.4}", run.cost.estimated_speedup);
    Ok(ExitCode::SUCCESS)
}

fn gen(args: GenArgs) -> Result<ExitCode, Error> {
    let params = SynthParams::new(
        args.seed,
        args.groups,
        args.video_tokens,
        args.audio_tokens,
        args.dim,
        args.regime,
    );
    let instance = generate_synthetic(&params)?;
    instance.write_to(&args.out_dir)?;
    println!("wrote {} groups to {}", args.groups, args.out_dir.display());
    Ok(ExitCode::SUCCESS)
}

fn verify(dir: PathBuf) -> Result<ExitCode, Error> {
    let report = verify_dir(&dir)?;
    for c in &report.checks {
        let tag = if c.passed { "PASS" } else { "FAIL" };
        println!("{tag} {}: {}", c.name, c.detail);
    }
    Ok(if report.passed() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(2)
    })
}
