use std::f64::consts::TAU;
use std::fs;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::error::ErrorKind;
use clap::{Args, CommandFactory, Parser, Subcommand, ValueEnum};
use serde_json::json;
use tracing_subscriber::EnvFilter;

use trochoid_client::Client;
use trochoid_core::api::{
    self, ClassifyRequest, FamilyRequest, LinearRequest, OutputFormat, PlotRequest, Rendered, VerifyRequest,
};
use trochoid_core::exact::{parse_decimal_or_fraction, Exact};
use trochoid_core::linear::LinearRig;
use trochoid_core::machine::DEFAULT_TICK_RATE;
use trochoid_core::sliding::SlideMethod;
use trochoid_core::trace::{FamilySpec, DEFAULT_SAMPLES_PER_CLOSURE};
use trochoid_core::{Frame, Frequency, Polarization, Rig};
use trochoid_service::{ServiceConfig, DEFAULT_PORT};

const LOG_ENV: &str = "TROCHOID_MILL_LOG";

/// Plot, classify and verify trochoids drawn by a turntable and pen gear.
#[derive(Debug, Parser)]
#[command(name = "trochoid-mill", version)]
struct Cli {
    /// Send the request to a running control service instead of computing locally.
    #[arg(long, global = true, value_name = "URL")]
    server: Option<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Sample one rig and write SVG or CSV.
    Plot {
        #[command(flatten)]
        rig: RigArgs,
        #[arg(long, value_enum, default_value_t = FrameArg::Table)]
        frame: FrameArg,
        #[arg(long, default_value_t = DEFAULT_SAMPLES_PER_CLOSURE)]
        samples: usize,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Print the curve class of a rig as JSON.
    Classify {
        #[command(flatten)]
        rig: RigArgs,
    },
    /// Run the property suites and print a pass/fail table.
    Verify {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Suite to run; repeat for several. All suites when omitted.
        #[arg(long = "suite", value_name = "NAME")]
        suites: Vec<String>,
    },
    /// Slide a base rig through a list of steps and draw every member.
    Family {
        #[command(flatten)]
        rig: RigArgs,
        #[arg(long, value_enum)]
        method: MethodArg,
        /// Comma-separated signed steps, e.g. "0,1/2,1".
        #[arg(long, value_parser = parse_steps, allow_hyphen_values = true)]
        steps: Steps,
        #[arg(long, value_enum, default_value_t = FrameArg::Table)]
        frame: FrameArg,
        #[arg(long, default_value_t = DEFAULT_SAMPLES_PER_CLOSURE)]
        samples: usize,
        #[arg(long, value_name = "FILE")]
        out: Option<PathBuf>,
    },
    /// Drive a gear along a straight rack.
    Linear {
        /// Gear radius.
        #[arg(long, value_parser = parse_length)]
        r: Exact,
        /// Pen radius.
        #[arg(long = "R", value_parser = parse_length)]
        big_r: Exact,
        /// Gear angular frequency.
        #[arg(long = "omega", alias = "omega-pen", value_parser = parse_frequency, default_value = "1")]
        omega: Frequency,
        /// End of the sampled interval; two gear turns by default.
        #[arg(long)]
        t_end: Option<f64>,
        #[arg(long, default_value_t = DEFAULT_SAMPLES_PER_CLOSURE)]
        samples: usize,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Run the HTTP and WebSocket control service.
    Serve {
        #[command(flatten)]
        rig: RigArgs,
        #[arg(long, default_value_t = DEFAULT_PORT)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: std::net::IpAddr,
        #[arg(long, default_value_t = DEFAULT_TICK_RATE)]
        tick_rate: u32,
    },
}

#[derive(Debug, Args)]
struct RigArgs {
    /// Center distance between turntable and pen gear.
    #[arg(long, value_parser = parse_length)]
    a: Option<Exact>,
    /// Pen offset from the gear center.
    #[arg(long, value_parser = parse_length)]
    b: Option<Exact>,
    /// Turntable frequency, integer or p/q.
    #[arg(long, value_parser = parse_frequency)]
    omega_table: Option<Frequency>,
    /// Pen gear frequency, integer or p/q.
    #[arg(long, value_parser = parse_frequency)]
    omega_pen: Option<Frequency>,
    #[arg(long, value_enum, default_value_t = PolarizationArg::Anti)]
    polarization: PolarizationArg,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    phase_table: f64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    phase_pen: f64,
}

#[derive(Debug, Args)]
struct OutputArgs {
    /// Output file; the document goes to stdout when omitted.
    #[arg(long, value_name = "FILE")]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = FormatArg::Svg)]
    format: FormatArg,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FrameArg {
    Table,
    Lab,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FormatArg {
    Svg,
    Csv,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum MethodArg {
    Stcp,
    Stcf,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum PolarizationArg {
    Co,
    Anti,
}

#[derive(Debug, Clone)]
struct Steps(Vec<Exact>);

impl From<FrameArg> for Frame {
    fn from(value: FrameArg) -> Self {
        match value {
            FrameArg::Table => Frame::Turntable,
            FrameArg::Lab => Frame::Laboratory,
        }
    }
}

impl From<FormatArg> for OutputFormat {
    fn from(value: FormatArg) -> Self {
        match value {
            FormatArg::Svg => OutputFormat::Svg,
            FormatArg::Csv => OutputFormat::Csv,
        }
    }
}

impl From<MethodArg> for SlideMethod {
    fn from(value: MethodArg) -> Self {
        match value {
            MethodArg::Stcp => SlideMethod::Stcp,
            MethodArg::Stcf => SlideMethod::Stcf,
        }
    }
}

impl From<PolarizationArg> for Polarization {
    fn from(value: PolarizationArg) -> Self {
        match value {
            PolarizationArg::Co => Polarization::Co,
            PolarizationArg::Anti => Polarization::Anti,
        }
    }
}

fn parse_frequency(text: &str) -> Result<Frequency, String> {
    text.parse().map_err(|e: trochoid_core::Error| e.to_string())
}

fn parse_length(text: &str) -> Result<Exact, String> {
    parse_decimal_or_fraction(text).map_err(|e| e.to_string())
}

fn parse_steps(text: &str) -> Result<Steps, String> {
    text.split(',')
        .map(parse_length)
        .collect::<Result<Vec<_>, _>>()
        .map(Steps)
}

/// Exit with clap's usage error, status 2.
fn usage_error(message: impl std::fmt::Display) -> ! {
    Cli::command().error(ErrorKind::ValueValidation, message).exit()
}

impl RigArgs {
    /// Build a rig; missing values are taken from `fallback` or reported as
    /// a usage error.
    fn rig(&self, fallback: Option<&Rig>) -> Rig {
        let pick = |value: Option<Exact>, from: fn(&Rig) -> Exact, flag: &str| -> Exact {
            value
                .or_else(|| fallback.map(from))
                .unwrap_or_else(|| usage_error(format!("--{flag} is required")))
        };
        let pick_freq = |value: Option<Frequency>, from: fn(&Rig) -> Frequency, flag: &str| -> Frequency {
            value
                .or_else(|| fallback.map(from))
                .unwrap_or_else(|| usage_error(format!("--{flag} is required")))
        };
        let a = pick(self.a.clone(), |r| r.a().clone(), "a");
        let b = pick(self.b.clone(), |r| r.b().clone(), "b");
        let big = pick_freq(self.omega_table.clone(), |r| r.big_omega().clone(), "omega-table");
        let small = pick_freq(self.omega_pen.clone(), |r| r.small_omega().clone(), "omega-pen");
        Rig::with_phases(a, b, big, small, self.polarization.into(), self.phase_table, self.phase_pen)
            .unwrap_or_else(|e| usage_error(e))
    }
}

fn main() -> ExitCode {
    let cli = Cli::try_parse().unwrap_or_else(|err| {
        // value errors come without the usage line; flag errors always show it
        if err.use_stderr() && !err.render().to_string().contains("Usage:") {
            let _ = err.print();
            eprintln!("\n{}", Cli::command().render_usage());
            std::process::exit(2);
        }
        err.exit()
    });
    let filter = EnvFilter::try_from_env(LOG_ENV).unwrap_or_else(|_| EnvFilter::new("warn"));
    tracing_subscriber::fmt().with_env_filter(filter).with_writer(std::io::stderr).init();

    let runtime = match tokio::runtime::Runtime::new() {
        Ok(rt) => rt,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::FAILURE;
        }
    };
    match runtime.block_on(run(cli)) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

async fn run(cli: Cli) -> Result<ExitCode> {
    let remote = cli.server.as_ref().map(|url| Client::new(url).unwrap_or_else(|e| usage_error(e)));
    match cli.command {
        Command::Classify { rig } => {
            let req = ClassifyRequest { rig: rig.rig(None), tolerance: None };
            let class = match &remote {
                Some(client) => client.classify(&req).await?,
                None => api::classify_rig(&req)?,
            };
            println!("{}", class.to_json());
        }
        Command::Plot { rig, frame, samples, output } => {
            let req = PlotRequest {
                rig: rig.rig(None),
                frame: frame.into(),
                samples,
                format: output.format.into(),
            };
            let resp = match &remote {
                Some(client) => client.plot(&req).await?,
                None => api::plot(&req)?,
            };
            let summary = json!({ "class": resp.class, "cusps": resp.cusps.count });
            emit(&resp.rendered, output.out.as_deref(), summary)?;
        }
        Command::Verify { seed, suites } => {
            let req = VerifyRequest { seed, suites };
            let report = match &remote {
                Some(client) => client.verify(&req).await?,
                None => api::verify(&req)?,
            };
            print!("{}", report.to_table());
            if !report.all_passed() {
                return Ok(ExitCode::FAILURE);
            }
        }
        Command::Family { rig, method, steps, frame, samples, out } => {
            let req = FamilyRequest {
                spec: FamilySpec {
                    base: rig.rig(None),
                    method: method.into(),
                    steps: steps.0,
                },
                frame: frame.into(),
                samples,
            };
            let resp = match &remote {
                Some(client) => client.family(&req).await?,
                None => api::family(&req)?,
            };
            let summary = json!({ "members": resp.members });
            emit(&resp.rendered, out.as_deref(), summary)?;
        }
        Command::Linear { r, big_r, omega, t_end, samples, output } => {
            let t_end = t_end.unwrap_or(2.0 * TAU / omega.to_f64());
            let rig = LinearRig::new(r, big_r, omega).unwrap_or_else(|e| usage_error(e));
            let req = LinearRequest {
                rig,
                t_end,
                samples,
                format: output.format.into(),
            };
            let resp = match &remote {
                Some(client) => client.linear(&req).await?,
                None => api::linear(&req)?,
            };
            let mut summary = json!({ "class": resp.class, "speed": resp.speed.to_string() });
            if let Some(fraction) = &resp.slide_fraction {
                summary["slide_fraction"] = json!(fraction.to_string());
            }
            emit(&resp.rendered, output.out.as_deref(), summary)?;
        }
        Command::Serve { rig, port, host, tick_rate } => {
            if remote.is_some() {
                usage_error("--server cannot be combined with serve");
            }
            let defaults = ServiceConfig::default();
            let config = ServiceConfig {
                rig: rig.rig(Some(&defaults.rig)),
                tick_rate,
                ..defaults
            };
            let addr = SocketAddr::new(host, port);
            let listener = tokio::net::TcpListener::bind(addr)
                .await
                .with_context(|| format!("binding {addr}"))?;
            eprintln!("listening on http://{}", listener.local_addr()?);
            trochoid_service::serve(listener, config, async {
                let _ = tokio::signal::ctrl_c().await;
            })
            .await?;
        }
    }
    Ok(ExitCode::SUCCESS)
}

/// Write the document to `out`, with a `.json` sidecar for CSV, and print
/// `summary`; without `out` the document itself goes to stdout.
fn emit(rendered: &Rendered, out: Option<&Path>, summary: serde_json::Value) -> Result<()> {
    let Some(path) = out else {
        print!("{}", rendered.body);
        return Ok(());
    };
    fs::write(path, &rendered.body).with_context(|| format!("writing {}", path.display()))?;
    if rendered.format == OutputFormat::Csv {
        if let Some(meta) = api::sidecar(rendered) {
            let side = path.with_extension("json");
            fs::write(&side, meta + "\n").with_context(|| format!("writing {}", side.display()))?;
        }
    }
    println!("{summary}");
    Ok(())
}
