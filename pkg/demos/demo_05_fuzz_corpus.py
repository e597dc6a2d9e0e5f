"""
Exploring a larger fuzz corpus
==============================

Grow the UDP seeds into a hundred mutated inputs, replay them through the
interpreter to get traces and crash reports, and explore the result. Many
crashes share a site and fold into one report section.
"""

import os
import tempfile
import time
from pathlib import Path

from vulnexplore.corpus import compute_coverset, load_corpus
from vulnexplore.explore import ExploreConfig, render_report, run_explore
from vulnexplore.fixtures import materialize, mutated_seeds

workdir = Path(tempfile.mkdtemp())
manifest = materialize("udp", workdir, mutated_seeds("udp", 100, seed=1))
corpus = load_corpus(manifest)
print(len(corpus), "inputs,", len(corpus.crashes()), "crashing")
print("functions covered:", sorted(str(k) for k in compute_coverset(corpus).functions))

os.chdir(workdir)
start = time.perf_counter()
report = run_explore(ExploreConfig(("udp.mc", "pinctrl.mc"), manifest, jobs=4))
print(f"explored in {time.perf_counter() - start:.3f}s")
print(render_report(report, "text"))
