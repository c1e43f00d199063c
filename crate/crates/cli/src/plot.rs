//! Companion matplotlib scripts written next to the CSV.

use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlotKind {
    Sweep,
    Kk,
    Zeros,
    Pulse,
}

/// `out.csv` -> `out.plot.py`
pub fn script_path(csv: &Path) -> PathBuf {
    csv.with_extension("plot.py")
}

fn body(kind: PlotKind) -> &'static str {
    match kind {
        PlotKind::Sweep => {
            r#"fig, (ax1, ax2, ax3) = plt.subplots(3, 1, sharex=True, figsize=(7, 9))
f = col("frequency_hz") / 1e9
ax1.plot(f, col("magnitude"))
ax1.set_ylabel("|H|")
ax2.plot(f, col("phase_rad"))
ax2.set_ylabel("phase (rad)")
ax3.plot(f, col("group_delay_s") * 1e9)
ax3.set_ylabel("group delay (ns)")
ax3.set_xlabel("frequency (GHz)")
"#
        }
        PlotKind::Kk => {
            r#"fig, (ax1, ax2) = plt.subplots(2, 1, sharex=True, figsize=(7, 7))
f = col("frequency_hz") / 1e9
ax1.plot(f, col("phase_model_rad"), ":", label="model")
ax1.plot(f, col("phase_kk_rad"), label="from |H|")
ax1.set_ylabel("phase (rad)")
ax1.legend()
ax2.plot(f, col("residual_rad"))
ax2.set_ylabel("residual (rad)")
ax2.set_xlabel("frequency (GHz)")
"#
        }
        PlotKind::Zeros => {
            r#"fig, ax = plt.subplots(figsize=(7, 5))
ax.scatter(col("re_hz") / 1e9, col("im_hz") / 1e9)
ax.axhline(0.0, color="k", lw=0.5)
ax.set_xlabel("Re f (GHz)")
ax.set_ylabel("Im f (GHz)")
"#
        }
        PlotKind::Pulse => {
            r#"fig, ax = plt.subplots(figsize=(7, 5))
t = col("time_s") * 1e9
ax.plot(t, col("input_envelope"), label="input")
ax.plot(t, col("output_envelope"), label="output")
ax.set_xlabel("time (ns)")
ax.set_ylabel("envelope")
ax.legend()
"#
        }
    }
}

pub fn script(kind: PlotKind, csv_name: &str) -> String {
    format!(
        r#"import csv
import os

import matplotlib.pyplot as plt
import numpy as np

here = os.path.dirname(os.path.abspath(__file__))
with open(os.path.join(here, {csv_name:?}), newline="") as fh:
    rows = list(csv.DictReader(fh))


def col(name):
    return np.array([float(r[name]) for r in rows])


{body}fig.tight_layout()
fig.savefig(os.path.join(here, {png:?}), dpi=150)
"#,
        body = body(kind),
        png = Path::new(csv_name).with_extension("png").display().to_string(),
    )
}
