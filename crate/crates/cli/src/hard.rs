use std::io::Write;
use std::path::PathBuf;

use clap::Args;

use seqest::distributions::{hellinger_sq, tilt_hard_instance, DistSpec};

use crate::{emit, CliError, CliResult};

#[derive(Debug, Clone, Args)]
pub struct HardArgs {
    /// Distribution on [0, 1], e.g. `bernoulli:0.5`.
    #[arg(long)]
    pub dist: String,
    /// Mean shift of the tilted partner.
    #[arg(long)]
    pub eps: f64,
    /// Also write the tilted spec to this file.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn cmd_hard_instance(args: &HardArgs, out: &mut dyn Write) -> CliResult<()> {
    let spec: DistSpec = args.dist.parse()?;
    let DistSpec::Finite(d) = spec else {
        return Err(CliError::Usage(
            "hard-instance needs a distribution over single values".into(),
        ));
    };
    let tilted = tilt_hard_instance(&d, args.eps)?;
    let var = d.variance();
    if let Some(path) = &args.out {
        emit(Some(path), out, format!("{}\n", tilted.to_spec()).as_bytes())?;
    }
    let text = format!(
        "tilted: {}\nmean: {}\ntilted_mean: {}\nvariance: {var}\nhellinger_sq: {}\nbound: {}\n",
        tilted.to_spec(),
        d.mean(),
        tilted.mean(),
        hellinger_sq(&d, &tilted),
        args.eps * args.eps / var,
    );
    out.write_all(text.as_bytes())
        .map_err(|e| CliError::io("<stdout>", e))
}
