"""
Lungtex Synth — Deterministic synthetic lung-sound cycles
Normal breath noise · Wheeze (tonal, vibrato) · Crackle (damped transients) · WAV corpora
"""

import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import signal

from src.core.audio_io import (
    LABEL_TOKENS, AudioCycle, DatasetManifest, ManifestEntry, load_manifest, save_cycle, save_manifest,
)
from src.core.config import MIN_RATE
from src.core.errors import ConfigError

logger = logging.getLogger(__name__)

KINDS = ("normal", "wheeze", "crackle")
DEFAULT_RATE = 8000
PEAK = 0.9

BREATH_CUTOFF_HZ = 300.0
WHEEZE_HZ = (250.0, 700.0)
VIBRATO_HZ = (4.0, 6.0)
VIBRATO_DEPTH = 0.02            # relative frequency swing
CRACKLE_HZ = (600.0, 1200.0)
CRACKLE_DECAY_S = 0.003
CRACKLES_PER_S = 8.0
MIN_CRACKLES = 3

CYCLE_SECONDS = (1.5, 3.0)
CYCLES_PER_SUBJECT = 5


@dataclass(frozen=True)
class SynthSpec:
    kind: str = "normal"
    duration_s: float = 2.0
    seed: int = 0
    snr_db: float = 30.0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError(f"unknown synthetic class '{self.kind}' (choose from {', '.join(KINDS)})")
        if self.duration_s < 0.5:
            raise ConfigError(f"synthetic cycles must last >= 0.5 s, got {self.duration_s}")

    @property
    def label(self) -> int:
        return LABEL_TOKENS[self.kind]


# ── Components ──────────────────────────────────────────────────

def breath_envelope(n: int) -> np.ndarray:
    """Inspiration/expiration swell: never fully silent."""
    t = np.arange(n) / n
    return 0.15 + 0.85 * np.sin(np.pi * t) ** 2


def breath_noise(n: int, rate: int, rng: np.random.Generator) -> np.ndarray:
    """1/f-shaped noise low-passed at 300 Hz, under the breath envelope, unit RMS."""
    spectrum = np.fft.rfft(rng.standard_normal(n))
    f = np.fft.rfftfreq(n, 1.0 / rate)
    spectrum[1:] /= np.sqrt(f[1:])
    spectrum[0] = 0.0
    pink = np.fft.irfft(spectrum, n)
    sos = signal.butter(4, BREATH_CUTOFF_HZ, btype="low", fs=rate, output="sos")
    x = signal.sosfiltfilt(sos, pink) * breath_envelope(n)
    return x / np.sqrt(np.mean(x ** 2))


def wheeze_tone(n: int, rate: int, rng: np.random.Generator) -> np.ndarray:
    """Sustained tone with slow vibrato over the middle of the cycle."""
    f0 = rng.uniform(*WHEEZE_HZ)
    fv = rng.uniform(*VIBRATO_HZ)
    t = np.arange(n) / rate
    inst = f0 * (1.0 + VIBRATO_DEPTH * np.sin(2 * np.pi * fv * t))
    phase = 2 * np.pi * np.cumsum(inst) / rate
    gate = np.zeros(n)
    start, stop = int(0.2 * n), int(0.9 * n)
    gate[start:stop] = signal.windows.tukey(stop - start, alpha=0.2)
    return np.sin(phase + rng.uniform(0, 2 * np.pi)) * gate


def crackle_train(n: int, rate: int, rng: np.random.Generator) -> np.ndarray:
    """Poisson-timed exponentially damped sinusoids, 600-1200 Hz."""
    duration = n / rate
    count = max(MIN_CRACKLES, int(rng.poisson(CRACKLES_PER_S * duration)))
    onsets = np.sort(rng.integers(0, max(1, n - int(10 * CRACKLE_DECAY_S * rate)), size=count))
    tail = int(8 * CRACKLE_DECAY_S * rate)
    tt = np.arange(tail) / rate
    out = np.zeros(n)
    for onset in onsets:
        freq = rng.uniform(*CRACKLE_HZ)
        amp = rng.uniform(0.6, 1.0) * rng.choice((-1.0, 1.0))
        burst = amp * np.exp(-tt / CRACKLE_DECAY_S) * np.sin(2 * np.pi * freq * tt)
        end = min(n, onset + tail)
        out[onset:end] += burst[:end - onset]
    return out


# ── Cycles ──────────────────────────────────────────────────────

def generate(spec: SynthSpec, rate: int = DEFAULT_RATE, subject_id: str = "", cycle_id: str = "") -> AudioCycle:
    if rate < MIN_RATE:
        raise ConfigError(f"synthetic rate must be >= {MIN_RATE} Hz, got {rate}")
    rng = np.random.default_rng([spec.seed, KINDS.index(spec.kind)])
    n = int(round(spec.duration_s * rate))
    x = breath_noise(n, rate, rng)
    if spec.kind == "wheeze":
        x = x + 1.5 * wheeze_tone(n, rate, rng)
    elif spec.kind == "crackle":
        x = x + 4.0 * crackle_train(n, rate, rng)
    noise_rms = np.sqrt(np.mean(x ** 2)) * 10.0 ** (-spec.snr_db / 20.0)
    x = x + noise_rms * rng.standard_normal(n)
    x = PEAK * x / np.max(np.abs(x))
    return AudioCycle(x, rate, spec.label, subject_id, cycle_id)


def _cycle_seed(seed: int, index: int) -> int:
    return int(np.random.SeedSequence([seed, index]).generate_state(1)[0])


def generate_dataset(n_per_class: int, seed: int, out_dir, rate: int = DEFAULT_RATE,
                     grouped: bool = False, cycles_per_subject: int = CYCLES_PER_SUBJECT,
                     snr_db: float = 30.0) -> DatasetManifest:
    """Write WAV cycles plus manifest.csv under out_dir.

    Flat shape: n_per_class cycles each of normal, wheeze and crackle, one subject per cycle.
    Grouped shape: n_per_class normal and n_per_class crackle subjects, cycles_per_subject each.
    """
    if n_per_class < 1:
        raise ConfigError(f"n_per_class must be >= 1, got {n_per_class}")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)

    plan = []   # (kind, subject_id, cycle_id)
    if grouped:
        for kind in ("normal", "crackle"):
            for s in range(n_per_class):
                subject = f"{kind}_s{s:02d}"
                plan += [(kind, subject, f"{subject}_c{c}") for c in range(cycles_per_subject)]
    else:
        for kind in KINDS:
            plan += [(kind, f"{kind}_{i:03d}", f"{kind}_{i:03d}") for i in range(n_per_class)]

    entries = []
    for index, (kind, subject, cycle_id) in enumerate(plan):
        spec = SynthSpec(kind, float(rng.uniform(*CYCLE_SECONDS)), _cycle_seed(seed, index), snr_db)
        cycle = generate(spec, rate, subject, cycle_id)
        path = save_cycle(cycle, out / f"{cycle_id}.wav")
        entries.append(ManifestEntry(path.resolve(), cycle.label, subject, cycle_id, kind))

    manifest_path = save_manifest(DatasetManifest(out.name, entries), out / "manifest.csv")
    logger.info("synthetic corpus: %d cycles written to %s", len(entries), out)
    return load_manifest(manifest_path)
