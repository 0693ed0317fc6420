"""Seeded synthetic multichannel recordings with controllable pairwise coupling.

Every channel is a linear mixture of shared latent sources plus its own
independent source. All sources share one construction (white Gaussian
noise plus a unit-power sinusoid on a 0.25 Hz grid inside the pass band),
so band-pass filtering scales them alike and leaves the configured
correlations intact. Within a class block, channel ``i`` is::

    x_i = scale_i * (sum_j A_ij z_j + noise_i * e_i) + offset_i

with ``A A^T = C - diag(noise^2)`` for the block's coupling matrix ``C``,
which makes the expected correlation of channels ``i`` and ``j`` equal
``C_ij``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import InfeasibleCoupling
from .records import Channel, ChannelMeta, Modality, SignalRecord

# kss score emitted at the start of each class block
DEFAULT_CLASS_KSS = {0: 2, 1: 5, 2: 8}


@dataclass(frozen=True)
class SynthChannel:
    label: str
    modality: str
    sub_label: str = ""
    noise: float = 0.3
    scale: float = 1.0
    offset: float = 0.0


DEFAULT_CHANNELS = (
    SynthChannel("ECG", "ECG", "", 0.3, 500.0, 20.0),
    SynthChannel("EOG-H", "EOG", "H", 0.3, 80.0, -5.0),
    SynthChannel("EOG-V", "EOG", "V", 0.3, 80.0, 5.0),
    SynthChannel("EMG", "EMG", "", 0.3, 30.0, 0.0),
    SynthChannel("C3", "EEG", "C3", 0.3, 20.0, 2.0),
    SynthChannel("C4", "EEG", "C4", 0.3, 20.0, -2.0),
    SynthChannel("Cz", "EEG", "Cz", 0.3, 20.0, 1.0),
    SynthChannel("Fz", "EEG", "Fz", 0.3, 20.0, 0.0),
    SynthChannel("Pz", "EEG", "Pz", 0.3, 20.0, -1.0),
)


@dataclass(frozen=True)
class ClassSpec:
    """Coupling for one fatigue class.

    ``pairs`` maps ``"LABEL_A|LABEL_B"`` to a target correlation; every
    other off-diagonal entry is ``default``.
    """

    kss: int
    pairs: dict = field(default_factory=dict)
    default: float = 0.0


@dataclass(frozen=True)
class SynthConfig:
    sampling_rate: float = 512.0
    channels: tuple = DEFAULT_CHANNELS
    classes: dict = field(default_factory=dict)
    blocks: tuple = ()
    sine_fraction: float = 0.3
    sine_band: tuple = (2.0, 30.0)
    session_id: str = "synthetic"
    sessions: int = 1

    @property
    def duration(self) -> float:
        return float(sum(seconds for _, seconds in self.blocks))

    def coupling_matrix(self, class_id: int) -> np.ndarray:
        spec = self.classes[class_id]
        labels = [c.label for c in self.channels]
        n = len(labels)
        C = np.full((n, n), float(spec.default))
        np.fill_diagonal(C, 1.0)
        for key, value in spec.pairs.items():
            a, _, b = key.partition("|")
            try:
                i, j = labels.index(a.strip()), labels.index(b.strip())
            except ValueError:
                raise ValueError(f"coupling pair {key!r} names an unknown channel") from None
            if i != j:
                C[i, j] = C[j, i] = float(value)
        return C


def default_config(block_seconds=120.0, gap=0.45, sessions=1) -> SynthConfig:
    """Three-class layout whose EEG/EMG couplings step by ``gap`` per class."""
    eeg = ["C3", "C4", "Cz", "Fz", "Pz"]
    classes = {}
    for k, level in enumerate([0.05, 0.05 + gap, 0.05 + 2 * gap]):
        level = min(level, 0.9)
        pairs = {f"{a}|{b}": level for i, a in enumerate(eeg) for b in eeg[i + 1:]}
        pairs.update({f"EMG|{e}": level * 0.5 for e in eeg})
        pairs["ECG|EOG-H"] = 0.3 - 0.1 * k
        classes[k] = ClassSpec(kss=DEFAULT_CLASS_KSS[k], pairs=pairs, default=0.0)
    blocks = tuple((k, block_seconds) for k in (0, 1, 2))
    return SynthConfig(classes=classes, blocks=blocks, sessions=sessions)


def config_from_dict(data: dict) -> SynthConfig:
    """Build a SynthConfig from the YAML layout documented in the README."""
    data = dict(data or {})
    channels = tuple(SynthChannel(**c) for c in data.pop("channels", [])) or DEFAULT_CHANNELS
    classes = {}
    for key, spec in (data.pop("classes", None) or {}).items():
        spec = dict(spec)
        classes[int(key)] = ClassSpec(
            kss=int(spec.get("kss", DEFAULT_CLASS_KSS.get(int(key), 5))),
            pairs=dict(spec.get("pairs", {})),
            default=float(spec.get("default", 0.0)),
        )
    blocks = tuple((int(b["class"]), float(b["seconds"])) for b in data.pop("blocks", []))
    band = tuple(data.pop("sine_band", (2.0, 30.0)))
    allowed = {"sampling_rate", "sine_fraction", "session_id", "sessions"}
    unknown = set(data) - allowed
    if unknown:
        raise ValueError(f"unknown synthetic config keys: {sorted(unknown)}")
    cfg = SynthConfig(channels=channels, classes=classes, blocks=blocks, sine_band=band, **data)
    for cls, _ in cfg.blocks:
        if cls not in cfg.classes:
            raise ValueError(f"block refers to undefined class {cls}")
    return cfg


def load_config(path) -> SynthConfig:
    import yaml

    with open(path, encoding="utf-8") as fh:
        return config_from_dict(yaml.safe_load(fh))


def _mixing(cov_target: np.ndarray, noise: np.ndarray) -> np.ndarray:
    C = np.asarray(cov_target, dtype=np.float64)
    if not np.allclose(C, C.T):
        raise InfeasibleCoupling("coupling matrix is not symmetric")
    w = np.linalg.eigvalsh(C)
    if w.min() < -1e-9:
        raise InfeasibleCoupling(f"coupling matrix is not positive semidefinite "
                                 f"(smallest eigenvalue {w.min():.3g})")
    shared = C - np.diag(noise ** 2)
    w, V = np.linalg.eigh(shared)
    if w.min() < -1e-9:
        raise InfeasibleCoupling(
            f"coupling minus per-channel noise power is not positive semidefinite "
            f"(smallest eigenvalue {w.min():.3g}); lower the noise or the couplings")
    return V * np.sqrt(np.clip(w, 0.0, None))


def _sources(rng, n_sources, n_samples, rate, sine_fraction, band):
    """White noise plus one sinusoid per source on a 0.25 Hz grid.

    Frequencies are drawn without replacement so that sinusoids of
    different sources are orthogonal over any whole number of 4 s periods.
    """
    t = np.arange(n_samples) / rate
    grid = np.arange(band[0], band[1] + 1e-9, 0.25)
    if len(grid) < n_sources:
        raise ValueError("sine band too narrow for the number of sources")
    freqs = rng.choice(grid, size=n_sources, replace=False)
    phases = rng.uniform(0.0, 2 * np.pi, size=n_sources)
    white = rng.standard_normal((n_sources, n_samples))
    sines = np.sqrt(2.0) * np.sin(2 * np.pi * freqs[:, None] * t[None, :] + phases[:, None])
    return np.sqrt(1.0 - sine_fraction) * white + np.sqrt(sine_fraction) * sines


def _generate(config: SynthConfig, seed_seq, session_id: str) -> SignalRecord:
    rng = np.random.default_rng(seed_seq)
    rate = float(config.sampling_rate)
    n_ch = len(config.channels)
    noise = np.array([c.noise for c in config.channels], dtype=np.float64)
    if np.any(noise < 0) or np.any(noise > 1):
        raise InfeasibleCoupling("per-channel noise amplitude must lie in [0, 1]")
    mixers = {k: _mixing(config.coupling_matrix(k), noise) for k in sorted(config.classes)}
    block_samples = [int(round(sec * rate)) for _, sec in config.blocks]
    total = int(sum(block_samples))
    both = _sources(rng, 2 * n_ch, total, rate, config.sine_fraction, config.sine_band)
    latent, private = both[:n_ch], both[n_ch:]
    data = np.empty((n_ch, total))
    annotations = []
    start = 0
    for (cls, _), n in zip(config.blocks, block_samples):
        seg = slice(start, start + n)
        data[:, seg] = mixers[cls] @ latent[:, seg] + noise[:, None] * private[:, seg]
        annotations.append((start / rate, config.classes[cls].kss))
        start += n
    channels = []
    for row, spec in zip(data, config.channels):
        meta = ChannelMeta(spec.label, Modality(spec.modality), spec.sub_label, rate, "uV")
        channels.append(Channel(meta, spec.scale * row + spec.offset))
    return SignalRecord(tuple(channels), session_id, tuple(annotations))


def generate_synthetic(config: SynthConfig, seed: int) -> SignalRecord:
    """One synthetic session; a pure function of ``(config, seed)``."""
    return _generate(config, np.random.SeedSequence([int(seed), 0]), config.session_id)


def generate_sessions(config: SynthConfig, seed: int) -> list[SignalRecord]:
    """``config.sessions`` independent sessions named ``<session_id>-NN``."""
    if config.sessions == 1:
        return [generate_synthetic(config, seed)]
    return [_generate(config, np.random.SeedSequence([int(seed), i]), f"{config.session_id}-{i:02d}")
            for i in range(config.sessions)]
