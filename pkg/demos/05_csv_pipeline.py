"""End-to-end CSV pipeline: ingestion, noise augmentation, normalization.

Uses the bundled synthetic CSV (any numeric CSV with a header row works).
The protocol mirrors the real-data benchmark: embed the inputs among fake
uniform coordinates, split in half, normalize on the training half (inputs
to [-1, 1], response to sd 0.5), and compare estimators.
"""

from pathlib import Path

import numpy as np

from sparseindex.bench import CsvSource, ExperimentSpec, run_experiment, summarize
from sparseindex.data import augment_noise, load_csv, normalize

csv_path = Path(__file__).parent / "data" / "toy_si.csv"

raw = load_csv(csv_path, target_column="y")
print(f"loaded {csv_path.name}: n={raw.n}, p={raw.p} (rows with missing cells dropped)")

grown = augment_noise(raw, factor=4, seed=3)
print(f"augmented with fake uniform coordinates: p={raw.p} -> {grown.p}")

half = raw.n // 2
from sparseindex.core import Dataset

train_raw = Dataset(grown.x[:half], grown.y[:half], check_bounds=False)
normed_train, params = normalize(train_raw, train_raw)
print(f"normalized training half: inputs in [{normed_train.x.min():.2f}, "
      f"{normed_train.x.max():.2f}], response sd = {np.std(normed_train.y):.3f}")

spec = ExperimentSpec(
    source=CsvSource(str(csv_path), target="y", augment=True, factor=2),
    methods=("lasso", "nw"),
    repetitions=3,
    seed=4,
)
rows = run_experiment(spec)
print("\nbenchmark on the augmented CSV (3 repetitions):\n")
print(summarize(rows, format="markdown"))
print("the same run is available from the shell:")
print("  sparseindex benchmark --config <toml>   (see README for the schema)")
