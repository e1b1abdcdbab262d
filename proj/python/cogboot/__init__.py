"""Python access to the production-rule agent: rules, simulator, bootstrap and evaluation."""

import json
import os
from pathlib import Path

try:
    from . import _cogboot as _ext
except ImportError:  # in-tree build: the extension sits next to the build products
    import _cogboot as _ext

CogbootError = _ext.CogbootError
Simulator = _ext.Simulator
selection_probabilities = _ext.selection_probabilities
reinforce_path = _ext.reinforce_path
export_trees = _ext.export_trees

__all__ = [
    "CogbootError",
    "Simulator",
    "bootstrap",
    "data_dir",
    "evaluate",
    "export_trees",
    "parse_rule",
    "reinforce_path",
    "selection_probabilities",
]


def data_dir() -> Path:
    """Bundled scenarios, curriculum, fixtures and manifests."""
    env = os.environ.get("COGBOOT_DATA_DIR")
    if env:
        return Path(env)
    installed = Path(__file__).with_name("data")
    if installed.is_dir():
        return installed
    return Path(__file__).resolve().parents[2] / "data"


def parse_rule(text: str) -> dict:
    return json.loads(_ext.parse_rule(text))


def bootstrap(out, *, seed=0, fixtures=None, curriculum=None, scenario=None) -> dict:
    d = data_dir()
    return json.loads(
        _ext.bootstrap(
            str(out),
            str(fixtures or d / "fixtures" / "scripted_oracle.json"),
            str(curriculum or d / "curriculum.txt"),
            str(scenario or d / "scenarios" / "train.json"),
            seed,
        )
    )


def evaluate(run, manifest, *, mode="bootstrapped", seed=0, fixtures=None, curriculum=None) -> dict:
    d = data_dir()
    manifest = Path(manifest)
    if not manifest.exists():
        manifest = d / "manifests" / f"{manifest}.json"
    return json.loads(
        _ext.evaluate(
            str(run),
            str(manifest),
            mode,
            str(fixtures or d / "fixtures" / "scripted_oracle.json"),
            str(curriculum or d / "curriculum.txt"),
            seed,
        )
    )
