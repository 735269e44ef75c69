import os
import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).resolve().parent))

DATA_DIR = Path(os.environ.get(
    "MULLAB_DATA", Path(__file__).resolve().parent.parent / "datasets"
))


def benchmark_files(stem):
    """Locate <stem>.arff (or -train/-test pair) plus <stem>.xml under the
    data directory; returns None when the public files are not present."""
    xml = DATA_DIR / f"{stem}.xml"
    if not xml.exists():
        return None
    single = DATA_DIR / f"{stem}.arff"
    if single.exists():
        return {"full": single, "labels": xml}
    train = DATA_DIR / f"{stem}-train.arff"
    test = DATA_DIR / f"{stem}-test.arff"
    if train.exists() and test.exists():
        return {"train": train, "test": test, "labels": xml}
    return None


def require_benchmark(stem):
    found = benchmark_files(stem)
    if found is None:
        pytest.skip(
            f"public dataset '{stem}' not found under {DATA_DIR} "
            f"(set MULLAB_DATA or see README 'Benchmark datasets')"
        )
    return found
