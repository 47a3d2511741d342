"""Network configuration and the bundled per-size presets."""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, fields, replace
from importlib import resources
from pathlib import Path

from .neurons import NeuronParams
from .plasticity import PlasticityParams

PRESETS = ("wsnn-1k", "wsnn-2k", "wsnn-3k", "wsnn-4k")


@dataclass(frozen=True)
class NetworkConfig:
    # the eight searched hyperparameters, named after the published table
    additive_decay: float = 0.000045
    encoding_time: int = 20
    learning_rate: float = -0.0374
    max_synaptic_delays: int = 28
    neuron_threshold: float = -51.0
    delay_norm: float = 0.73
    spike_intensity: float = 0.41
    theta_plus: float = 1.5
    # fixed structure and constants the table leaves out
    n_neurons: int = 3000
    n_inputs: int = 784
    v_rest: float = -65.0
    tau_m: float = 100.0
    tau_stdp: float = 20.0
    theta_decay: float = 1e-4
    theta_init_max: float = 0.1
    stdp_timing: str = "emission"
    seed: int = 0
    # training-split intensity sum used for brightness balancing; set by training
    target_total: float | None = None

    def __post_init__(self):
        if self.n_neurons < 1:
            raise ValueError("n_neurons must be >= 1")
        if self.max_synaptic_delays < 1:
            raise ValueError("max_synaptic_delays must be >= 1")
        if self.encoding_time < 2:
            raise ValueError("encoding_time must be >= 2")

    @property
    def max_delay(self) -> int:
        return int(self.max_synaptic_delays)

    def neuron_params(self) -> NeuronParams:
        return NeuronParams(v_rest=self.v_rest, tau_m=self.tau_m, theta0=self.neuron_threshold,
                            theta_plus=self.theta_plus, theta_decay=self.theta_decay,
                            spike_intensity=self.spike_intensity)

    def plasticity_params(self) -> PlasticityParams:
        return PlasticityParams(learning_rate=self.learning_rate, tau_stdp=self.tau_stdp,
                                m_norm=self.delay_norm, additive_decay=self.additive_decay,
                                timing=self.stdp_timing)

    def replace(self, **changes) -> "NetworkConfig":
        return replace(self, **changes)

    def to_dict(self) -> dict:
        d = asdict(self)
        if math.isinf(d["tau_m"]):
            d["tau_m"] = None  # JSON has no infinity; null means integrate-and-fire
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, d: dict) -> "NetworkConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown config fields: {sorted(unknown)}")
        d = dict(d)
        if "tau_m" in d and d["tau_m"] is None:
            d["tau_m"] = math.inf
        for name in ("encoding_time", "max_synaptic_delays", "n_neurons", "n_inputs", "seed"):
            if name in d:
                d[name] = int(d[name])
        return cls(**d)


def load_config(source) -> NetworkConfig:
    """Load a config from a JSON file path or a bundled preset name."""
    name = str(source)
    stem = name[:-5] if name.endswith(".json") else name
    if stem in PRESETS and not Path(name).exists():
        text = resources.files("wsnn.presets").joinpath(f"{stem}.json").read_text()
    else:
        text = Path(source).read_text()
    return NetworkConfig.from_dict(json.loads(text))


def save_config(config: NetworkConfig, path) -> None:
    Path(path).write_text(json.dumps(config.to_dict(), indent=2, sort_keys=True) + "\n")
