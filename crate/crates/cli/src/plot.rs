/// Matplotlib script that draws every `*.csv` in its own directory.
pub fn script(title: &str) -> String {
    format!(
        r#"#!/usr/bin/env python3
"""Plots for {title}. Run from anywhere; reads the CSV files next to this script."""
import csv
import pathlib

import matplotlib.pyplot as plt

here = pathlib.Path(__file__).resolve().parent
for path in sorted(here.glob("*.csv")):
    with path.open() as f:
        rows = list(csv.reader(f))
    header, data = rows[0], rows[1:]
    t = [float(r[0]) for r in data]
    fig, ax = plt.subplots()
    for j, name in enumerate(header[1:], start=1):
        ax.plot(t, [float(r[j]) for r in data], label=name, drawstyle="steps-post")
    ax.set_xlabel("t [s]")
    ax.set_title(f"{title}: {{path.stem}}")
    ax.legend()
    fig.savefig(path.with_suffix(".png"), dpi=120)
    plt.close(fig)
"#
    )
}
