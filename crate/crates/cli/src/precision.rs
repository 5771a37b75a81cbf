use std::path::PathBuf;

use debayes::data::load_csv;
use debayes::precision::{self, PrecisionMethod};

use crate::config::Resolver;
use crate::{CliError, PrecisionArgs};

const KEYS: &[&str] = &["input", "response", "method", "scale", "symmetrize", "standardize", "output"];

pub fn run(args: PrecisionArgs) -> Result<(), CliError> {
    let mut r = Resolver::load(args.common.config.as_deref(), "precision", KEYS)?;
    let input: PathBuf = crate::required(r.get_opt("input", args.input)?, "input")?;
    let response: String = r.get("response", args.response, "y".to_string())?;
    let method: String = r.get("method", args.method, "nodewise".to_string())?;
    let scale = r.get("scale", args.scale, 1.0)?;
    let symmetrize = r.switch("symmetrize", args.symmetrize)?;
    let standardize = r.switch("standardize", args.standardize)?;
    let output: PathBuf = crate::required(r.get_opt("output", args.common.output)?, "output")?;
    let threads = r.threads(args.common.threads)?;
    let method: PrecisionMethod = crate::parse(&method)?;
    if !input.exists() {
        return Err(CliError::Data(format!("input file {} does not exist", input.display())));
    }
    r.record("input", &crate::absolute(&input));

    let (data, theta) = crate::pool(threads)?.install(|| -> Result<_, CliError> {
        let data = load_csv(&input, response.as_str(), standardize)?;
        let theta = precision::estimate(&data, method, scale, symmetrize)?;
        Ok((data, theta))
    })?;

    crate::prepare_output(&output)?;
    let names: Vec<String> = (0..data.p()).map(|j| data.column_name(j)).collect();
    theta.write_csv(output.join("theta.csv"), &names)?;
    crate::write_json(&output.join("precision.json"), &theta.summary())?;
    crate::write_manifest(&output, r.manifest("precision"))?;
    Ok(())
}
