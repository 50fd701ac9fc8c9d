//! Deterministic writers: CSV trajectories with 17 significant digits and
//! pretty JSON reports, both written atomically (temp file + rename).

use std::path::Path;

use liesys::models::OutputColumn;
use liesys::ode::Trajectory;
use liesys::principal::GroupKind;

use crate::CliError;

fn fmt17(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let io = |e: std::io::Error| CliError::Runtime(format!("cannot write {}: {e}", path.display()));
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent).map_err(io)?;
        }
    }
    let tmp = path.with_extension("tmp");
    std::fs::write(&tmp, bytes).map_err(io)?;
    std::fs::rename(&tmp, path).map_err(io)?;
    Ok(())
}

/// CSV for a trajectory: header `t,<col>,...`, LF line endings, 17
/// significant digits. Periodic coordinates are emitted unwrapped; when
/// `wrapped_columns` is set each periodic coordinate also gets a
/// `<col>_wrapped` companion reduced to [0, 2π).
pub fn trajectory_csv(
    trajectory: &Trajectory,
    columns: &[OutputColumn],
    wrapped_columns: bool,
) -> String {
    let chart = trajectory.chart();
    let periodic: Vec<bool> = chart.coords().iter().map(|c| c.periodic).collect();
    let mut header = String::from("t");
    for col in columns {
        header.push(',');
        header.push_str(col.column);
    }
    if wrapped_columns {
        for (col, is_periodic) in columns.iter().zip(&periodic) {
            if *is_periodic {
                header.push(',');
                header.push_str(col.column);
                header.push_str("_wrapped");
            }
        }
    }
    let mut out = header;
    out.push('\n');
    for idx in 0..trajectory.len() {
        let state = trajectory.state(idx);
        out.push_str(&fmt17(trajectory.times()[idx]));
        for (col, value) in columns.iter().zip(state) {
            out.push(',');
            out.push_str(&fmt17(col.transform.apply(*value)));
        }
        if wrapped_columns {
            let wrapped = trajectory.wrapped_state(idx);
            for ((_, is_periodic), value) in columns.iter().zip(&periodic).zip(&wrapped) {
                if *is_periodic {
                    out.push(',');
                    out.push_str(&fmt17(*value));
                }
            }
        }
        out.push('\n');
    }
    out
}

/// CSV for the group curve, serialized in the group's natural
/// parameterization (exponentiated for the multiplicative line).
pub fn group_csv(group: &Trajectory, kind: GroupKind) -> String {
    let mut out = String::from("t,g\n");
    for idx in 0..group.len() {
        out.push_str(&fmt17(group.times()[idx]));
        out.push(',');
        out.push_str(&fmt17(kind.from_additive(group.state(idx)[0])));
        out.push('\n');
    }
    out
}

pub fn json_bytes<T: serde::Serialize>(value: &T) -> Result<Vec<u8>, CliError> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::Runtime(format!("cannot serialize report: {e}")))?;
    text.push('\n');
    Ok(text.into_bytes())
}
