"""Experiment configuration: JSON round-trip, validation, presets.

A config has four blocks (model / algorithm(s) / run / output) and maps
directly onto the library objects. The spike is always the first basis
vector. Presets reproduce the paper-style experiments at desk scale
(n = 2000); `paper_scale()` switches a config to n = 10^4.
"""

from __future__ import annotations

import copy
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

from .models import LinkFunction, SingleIndexModel, TensorPcaModel
from .optimizers import AlgorithmSpec, FixedSummary, UniformSphere

__all__ = ["ExperimentConfig", "parse_link", "PRESETS", "load_config"]

PAPER_SCALE_N = 10**4

_NAMED_LINKS = {
    "x": ("monomial", 1),
    "x^2": ("monomial", 2),
    "x^3": ("monomial", 3),
    "x^7+4x^4": ("poly", [0, 0, 0, 0, 4.0, 0, 0, 1.0]),
}


def parse_link(spec) -> LinkFunction:
    """Link specs: a named string ("x", "x^2", "x^3", "x^7+4x^4"),
    {"monomial": k}, or {"poly": [c0, c1, ...]}."""
    if isinstance(spec, str):
        if spec not in _NAMED_LINKS:
            raise ValueError(f"unknown link {spec!r}; known: {sorted(_NAMED_LINKS)}")
        kind, arg = _NAMED_LINKS[spec]
    elif isinstance(spec, dict) and len(spec) == 1:
        kind, arg = next(iter(spec.items()))
    else:
        raise ValueError(f"bad link spec {spec!r}")
    if kind == "monomial":
        return LinkFunction.monomial(int(arg))
    if kind == "poly":
        return LinkFunction.polynomial(arg)
    raise ValueError(f"bad link spec {spec!r}")


@dataclass
class ExperimentConfig:
    model: dict
    algorithms: list[dict]
    run: dict
    output: dict = field(default_factory=lambda: {"directory": "out", "prefix": "run"})

    def __post_init__(self):
        fam = self.model.get("family")
        if fam not in ("tpca", "si"):
            raise ValueError(f"model.family must be 'tpca' or 'si', got {fam!r}")
        if fam == "tpca" and self.model.get("k", 2) < 2:
            raise ValueError("tensor PCA requires k >= 2")
        for alg in self.algorithms:
            kind = alg.get("kind")
            beta = alg.get("beta", 0.0)
            if kind not in ("sgd", "sgd-m", "sgd-u"):
                raise ValueError(f"unknown algorithm kind {kind!r}")
            if kind != "sgd-m" and beta != 0.0:
                raise ValueError(f"beta must be 0 for {kind}")

    # -- serialization ----------------------------------------------------

    def to_dict(self) -> dict:
        return copy.deepcopy(asdict(self))

    @staticmethod
    def from_dict(d: dict) -> "ExperimentConfig":
        d = copy.deepcopy(d)
        algs = d.pop("algorithms", None)
        if algs is None:
            algs = [d.pop("algorithm")]
        return ExperimentConfig(model=d["model"], algorithms=algs,
                                run=d["run"],
                                output=d.get("output",
                                             {"directory": "out", "prefix": "run"}))

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @staticmethod
    def from_json(text: str) -> "ExperimentConfig":
        return ExperimentConfig.from_dict(json.loads(text))

    # -- materialization --------------------------------------------------

    def build_model(self, n_override: int | None = None):
        mb = self.model
        n = int(n_override or mb["n"])
        if mb["family"] == "tpca":
            return TensorPcaModel.standard(n, int(mb["k"]), float(mb["lam"]),
                                           float(mb["c_delta"]))
        return SingleIndexModel.standard(n, parse_link(mb["link"]),
                                         float(mb.get("sigma2", 0.0)),
                                         float(mb["c_delta"]))

    def build_algorithm(self, index: int = 0) -> AlgorithmSpec:
        alg = self.algorithms[index]
        return AlgorithmSpec(kind=alg["kind"], c_delta=float(self.model["c_delta"]),
                             beta=float(alg.get("beta", 0.0)))

    def build_init(self):
        init = self.run.get("init", {"mode": "uniform_sphere", "radius": 1.0})
        if init["mode"] == "uniform_sphere":
            return UniformSphere(radius=float(init.get("radius", 1.0)))
        if init["mode"] == "fixed_summary":
            return FixedSummary(m0=float(init["m0"]), r02=float(init["r02"]))
        raise ValueError(f"unknown init mode {init!r}")

    def paper_scale(self) -> "ExperimentConfig":
        d = self.to_dict()
        d["model"]["n"] = PAPER_SCALE_N
        return ExperimentConfig.from_dict(d)


def load_config(path) -> ExperimentConfig:
    return ExperimentConfig.from_json(Path(path).read_text())


def _fig1(lam: float, prefix: str) -> dict:
    return {
        "model": {"family": "tpca", "n": 2000, "k": 2, "lam": lam, "c_delta": 1.0},
        "algorithms": [
            {"kind": "sgd", "label": "sgd"},
            {"kind": "sgd-m", "beta": 0.5, "label": "sgd-m(0.5)"},
            {"kind": "sgd-m", "beta": 0.9, "label": "sgd-m(0.9)"},
            {"kind": "sgd-u", "label": "sgd-u"},
        ],
        "run": {"T": 20.0, "replicas": 20, "record_stride": 200, "base_seed": 20240,
                "init": {"mode": "uniform_sphere", "radius": 1.0}},
        "output": {"directory": "out", "prefix": prefix},
    }


def _fig3(link: str, c_delta: float, prefix: str) -> dict:
    return {
        "model": {"family": "si", "n": 2000, "link": link, "sigma2": 0.25,
                  "c_delta": c_delta},
        "algorithms": [
            {"kind": "sgd", "label": "sgd"},
            {"kind": "sgd-u", "label": "sgd-u"},
        ],
        "run": {"T": 20.0, "replicas": 20, "record_stride": 200, "base_seed": 20242,
                "init": {"mode": "uniform_sphere", "radius": 1.0}},
        "output": {"directory": "out", "prefix": prefix},
    }


PRESETS: dict[str, dict] = {
    "fig1-left": _fig1(0.8, "fig1_left"),
    "fig1-middle": _fig1(1.2, "fig1_middle"),
    "fig1-right": _fig1(2.2, "fig1_right"),
    # diffusive regime near the equator: subcritical signal, SGD-U
    "fig2": {
        "model": {"family": "tpca", "n": 2000, "k": 2, "lam": 0.5, "c_delta": 1.0},
        "algorithms": [{"kind": "sgd-u", "label": "sgd-u"}],
        "run": {"T": 2.0, "replicas": 500, "record_stride": 50, "base_seed": 20241,
                "init": {"mode": "uniform_sphere", "radius": 1.0},
                "regime": "diffusive"},
        "output": {"directory": "out", "prefix": "fig2"},
    },
    "fig3-quadratic": _fig3("x^2", 0.05, "fig3_quadratic"),
    "fig3-cubic": _fig3("x^3", 0.02, "fig3_cubic"),
    "fig3-degree7": _fig3("x^7+4x^4", 0.002, "fig3_degree7"),
}


def preset_config(name: str) -> ExperimentConfig:
    if name not in PRESETS:
        raise ValueError(f"unknown preset {name!r}; known: {sorted(PRESETS)}")
    return ExperimentConfig.from_dict(PRESETS[name])
