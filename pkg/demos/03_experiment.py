"""A small end-to-end run driven by a config file, then replayed from its manifest.

    python demos/03_experiment.py [output-dir]

The same run from the command line:

    phishpoc stats --config demos/small_config.json --out runs/demo
    phishpoc prevalence --config demos/small_config.json --out runs/demo-prev
    phishpoc report --manifest runs/demo/manifest.json --out runs/demo-replay
"""

import sys
import tempfile
from pathlib import Path

from phishpoc.harness import ExperimentConfig, rerun_manifest, run_all

out = Path(sys.argv[1] if len(sys.argv) > 1 else tempfile.mkdtemp(prefix="phishpoc-demo-"))
config = ExperimentConfig.load(Path(__file__).with_name("small_config.json"))
exp = run_all(config, out / "run", prevalence=True)

print((out / "run" / "baseline.md").read_text())
print((out / "run" / "impact_difference_wp.md").read_text())
for rep in exp.run_significance():
    print(f"{rep.comparison:24} n={rep.n:3} p={rep.p_value:.4g} {rep.method}")

_, same = rerun_manifest(out / "run" / "manifest.json", out / "replay")
print(f"\nreplay: {sum(same.values())}/{len(same)} files byte-identical; outputs in {out}")
