//! Output directory, manifest and plot scripts.

use std::fs;
use std::path::PathBuf;

use serde_json::{json, Value};

use crate::config::{run_err, CliError, Config};

pub struct Output {
    pub dir: PathBuf,
    files: Vec<String>,
    rng_seeds: Vec<u64>,
}

impl Output {
    pub fn new(dir: PathBuf) -> Result<Self, CliError> {
        fs::create_dir_all(&dir).map_err(|e| CliError::config("out", format!("{}: {e}", dir.display())))?;
        Ok(Self {
            dir,
            files: Vec::new(),
            rng_seeds: Vec::new(),
        })
    }

    pub fn write(&mut self, name: &str, contents: impl AsRef<[u8]>) -> Result<(), CliError> {
        let path = self.dir.join(name);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).map_err(run_err)?;
        }
        fs::write(&path, contents).map_err(|e| run_err(format!("{}: {e}", path.display())))?;
        self.files.push(name.to_string());
        Ok(())
    }

    pub fn write_json(&mut self, name: &str, v: &Value) -> Result<(), CliError> {
        let mut s = serde_json::to_string_pretty(v).map_err(run_err)?;
        s.push('\n');
        self.write(name, s)
    }

    pub fn record_seed(&mut self, seed: u64) {
        self.rng_seeds.push(seed);
    }

    /// Resolved config, version, seeds and the files written. Contains no
    /// timestamps so that reruns produce an identical manifest.
    pub fn finish(mut self, cfg: &Config, threads: Option<usize>) -> Result<PathBuf, CliError> {
        let manifest = json!({
            "tool": "fhn-lab",
            "version": env!("CARGO_PKG_VERSION"),
            "subcommand": cfg.subcommand,
            "config": cfg.values,
            "rng_seeds": self.rng_seeds,
            "threads": threads,
            "outputs": self.files,
        });
        self.write_json("manifest.json", &manifest)?;
        Ok(self.dir.join("manifest.json"))
    }
}

const PLOT_PRELUDE: &str = r##"#!/usr/bin/env python3
# Generated by fhn-lab. Reads the CSV files next to this script.
import os
import sys

import matplotlib.pyplot as plt
import numpy as np

here = os.path.dirname(os.path.abspath(__file__))


def load(name):
    return np.genfromtxt(os.path.join(here, name), delimiter=",", names=True, comments="#")

"##;

/// A standalone matplotlib script; `body` uses `load` and `plt`.
pub fn plot_script(body: &str, png: &str) -> String {
    format!(
        "{PLOT_PRELUDE}\n{body}\nout = os.path.join(here, \"{png}\")\nplt.tight_layout()\nplt.savefig(out, dpi=150)\nprint(out, file=sys.stderr)\n"
    )
}

pub const PLOT_WAVETRAIN: &str = r#"d = load("profile.csv")
fig, ax = plt.subplots(2, 1, sharex=True, figsize=(7, 5))
ax[0].plot(d["xi"], d["u"], label="u")
ax[0].plot(d["xi"], d["w"], label="w")
ax[0].legend()
ax[1].plot(d["xi"], d["du"], label="u'")
ax[1].plot(d["xi"], d["dw"], label="w'")
ax[1].set_xlabel("xi")
ax[1].legend()
"#;

pub const PLOT_SPECTRUM: &str = r#"d = load("eigencurves.csv")
fig, ax = plt.subplots(figsize=(7, 4))
for name in d.dtype.names:
    if name.startswith("re_lambda_"):
        ax.plot(d["kappa"], d[name], ".", ms=3)
ax.set_xlabel("kappa")
ax.set_ylabel("Re lambda")
ax.set_ylim(-0.5, 0.05)
ax.axhline(0.0, color="k", lw=0.5)
"#;

pub const PLOT_SIMULATE: &str = r#"tr = load("front_track.csv")
nr = load("norms.csv")
fig, ax = plt.subplots(2, 1, figsize=(7, 6))
ax[0].plot(tr["t"], tr["position"])
ax[0].set_xlabel("t")
ax[0].set_ylabel("front position")
ax[1].plot(nr["t"], nr["linf_u"], label="sup |u|")
ax[1].plot(nr["t"], nr["l2_u"], label="L2 u")
ax[1].set_xlabel("t")
ax[1].legend()
"#;

pub const PLOT_DIAGNOSE: &str = r#"un = load("unmodulated.csv")
mo = load("modulated.csv")
fig, ax = plt.subplots(figsize=(7, 5))
ax.loglog(un["t"], un["linf"], label="unmodulated")
ax.loglog(mo["t"], mo["linf"], label="modulated")
ax.loglog(un["t"], un["refined"], label="refined functional")
t = un["t"][un["t"] > 0]
for p, s in [(0.5, ":"), (1.0, "--"), (1.5, "-.")]:
    ax.loglog(t, un["linf"][un["t"] > 0][-1] * (t / t[-1]) ** (-p), "k" + s, lw=0.7, label=f"t^-{p}")
ax.set_xlabel("t")
ax.legend()
"#;

pub const PLOT_FIGURE1: &str = r#"fig, ax = plt.subplots(3, 1, figsize=(8, 8))
for side in ["positive", "negative"]:
    f = load(f"final_{side}.csv")
    ax[0 if side == "positive" else 1].plot(f["x"], f["u"], lw=0.7)
    ax[0 if side == "positive" else 1].set_title(f"{side} seed, u at t_end")
    tr = load(f"track_{side}.csv")
    ax[2].plot(tr["t"], tr["position"], label=side)
ax[2].set_xlabel("t")
ax[2].set_ylabel("front position")
ax[2].legend()
"#;
