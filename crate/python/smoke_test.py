#!/usr/bin/env python3
"""Builds the Python extension module and checks pinned values.

Run from anywhere: the script locates the workspace root relative to
itself, builds the release cdylib, imports it from a scratch directory,
and exercises the analytic kernels plus one full pipeline run.
"""

import json
import math
import shutil
import subprocess
import sys
import tempfile
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent


def main() -> None:
    subprocess.run(
        ["cargo", "build", "--release", "-p", "rosesim-py"],
        cwd=ROOT,
        check=True,
    )
    lib = ROOT / "target" / "release" / "librosesim_py.so"
    with tempfile.TemporaryDirectory() as td:
        shutil.copy(lib, Path(td) / "rosesim_py.so")
        sys.path.insert(0, td)
        import rosesim_py as rp

        # Closed-form echo efficiency at the bench operating point.
        eff = rp.analytic_efficiency(1.4, 20e-6, 55e-6)
        assert abs(eff - 0.11286069805684637) < 1e-12, eff

        # Spontaneous emission per 256 ns bin for the inverted line.
        per_bin = rp.se_photons_per_bin(1.4, 1.0, 2 * math.pi * 480e3, 256e-9)
        assert abs(per_bin - 0.344064) < 1e-9, per_bin

        # Adiabaticity ratios at the working point.
        mu_ratio, drive_ratio, decay_ratio, ok = rp.adiabatic_report(
            2 * math.pi * 800e3, 2 * math.pi * 80e3, 3.0, 55e-6
        )
        assert ok, (mu_ratio, drive_ratio, decay_ratio)
        assert abs(drive_ratio - 100.0 / 3.0) < 1e-9, drive_ratio
        assert abs(decay_ratio - 55e-6 * 2 * math.pi * 80e3) < 1e-9, decay_ratio

        # Chirped envelope one characteristic width from center.
        beta = 2 * math.pi * 80e3
        amp, phase = rp.chs_envelope(1.0, beta, 3.0, 0.0, [1.0 / beta])
        assert abs(amp[0] - 0.6480542736638855) < 1e-12, amp
        assert abs(phase[0] - 3.0 * 0.4337808304830271) < 1e-12, phase

        # Spectral gate on the faint pulse.
        stretch, energy = rp.filtered_pulse_analysis(1e-6, 2 * math.pi * 240e3)
        assert abs(stretch - 1.249) < 5e-3, stretch
        assert abs(energy - 0.96704) < 1e-3, energy

        # Geometry: the first echo is silenced, the revived one emits.
        (first_m, first_r), (rev_m, rev_r) = rp.echo_regimes(
            [0.0, 0.0, 1.0], [0.0, 0.0, -1.0], 793e-9, 8e-3
        )
        assert first_r == "silenced" and rev_r == "emitted", (first_r, rev_r)
        assert abs(first_m - 1.2677e5) / 1.2677e5 < 1e-3, first_m
        assert abs(rev_m) < 1e-9, rev_m

        # One full pipeline run through the bindings.
        metrics = json.loads(rp.run_baseline(7))
        assert 0.10 <= metrics["efficiency"] <= 0.12, metrics["efficiency"]
        assert abs(metrics["echo_time_s"] - 40e-6) < 1e-6, metrics["echo_time_s"]
        assert 0.8 <= metrics["background"] <= 1.6, metrics["background"]
        assert 1.0 <= metrics["echo"] <= 2.2, metrics["echo"]

        print(
            "smoke test passed:"
            f" efficiency={metrics['efficiency']:.4f}"
            f" echo={metrics['echo']:.3f}"
            f" background={metrics['background']:.3f}"
            f" snr={metrics['snr']:.3f}"
        )


if __name__ == "__main__":
    main()
