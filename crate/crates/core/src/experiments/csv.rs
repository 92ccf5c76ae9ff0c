use std::io::Write;
use std::path::Path;

use super::run::SweepResult;
use crate::error::{Error, Result};

/// `%.9g`-style formatting: nine significant digits, trailing zeros
/// trimmed, scientific notation outside `[1e-4, 1e9)`.
pub fn format_sig(x: f64) -> String {
    const SIG: i32 = 9;
    if x.is_nan() {
        return "NaN".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{:.*e}", (SIG - 1) as usize, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -4 || exp >= SIG {
        format!("{}e{}{:02}", trim(mantissa), if exp < 0 { '-' } else { '+' }, exp.abs())
    } else {
        trim(&format!("{:.*}", (SIG - 1 - exp).max(0) as usize, x)).to_string()
    }
}

fn trim(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// Renders the CSV text: a `# cfg=<hash>` line, the header, one line per
/// row. Failed rows carry NaN in every observable column.
pub fn render_csv(result: &SweepResult) -> Result<String> {
    if result.rows.is_empty() {
        return Err(Error::Scenario(format!("{}: no rows to write", result.name)));
    }
    let mut out = format!("# cfg={}\n", result.config_hash);
    let mut header: Vec<&str> = Vec::new();
    if let Some(s) = &result.series_param {
        header.push(s);
    }
    header.push(&result.axis_param);
    header.extend(result.observables.iter().map(String::as_str));
    out.push_str(&header.join(","));
    out.push('\n');
    for row in &result.rows {
        let mut cells: Vec<String> = Vec::with_capacity(header.len());
        if let Some(s) = row.series {
            cells.push(format_sig(s));
        }
        cells.push(format_sig(row.axis));
        match &row.outcome {
            Ok(v) => cells.extend(v.iter().map(|&x| format_sig(x))),
            Err(_) => cells.extend(result.observables.iter().map(|_| "NaN".to_string())),
        }
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    Ok(out)
}

/// Writes [`render_csv`] to `path`, creating parent directories. Nothing is
/// created for an empty result.
pub fn emit_csv(result: &SweepResult, path: &Path) -> Result<()> {
    let text = render_csv(result)?;
    let io = |source| Error::Io { path: path.to_path_buf(), source };
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(io)?;
    }
    let mut f = std::fs::File::create(path).map_err(io)?;
    f.write_all(text.as_bytes()).map_err(io)?;
    Ok(())
}
