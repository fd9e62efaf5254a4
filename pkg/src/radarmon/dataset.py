"""Labeled dataset construction and peak-SNR estimation.

Chunks are synthesized per scenario: class 0 mixes a radar pulse train
(radar-only, radar+WLAN, radar+LTE) into receiver noise, class 1 holds
only secondary users or noise.  Every chunk derives its RNG stream from
(seed, split, index), so generation is reproducible and order-independent,
and class-0 chunks are guaranteed a minimum number of visible pulse
samples.  PSNR is estimated from the synthesizer's ground-truth masks:
mean power over pulse samples against mean power over the rest.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import emitters, radar
from .channel import apply_multipath, mix
from .iqcore import (
    CHUNK_LEN,
    Emitter,
    IqChunk,
    PulseAnnotation,
    SampleStream,
    chunk_stream,
    make_chunk,
    radar_mask,
    read_iq_file,
    stream_window,
    write_iq_file,
)

CLASS0_SUBCASES = ("radar-only", "radar+wlan", "radar+lte")
CLASS1_SUBCASES = ("lte-only", "wlan-only", "noise")

CARRIER_OFFSETS_HZ = (-6e6, -3e6, 0.0, 3e6, 6e6)


@dataclass(frozen=True)
class WaveformSpec:
    name: str
    ipm: radar.Ipm
    pw_s: float


TABLE_WAVEFORMS = (
    WaveformSpec("pc2", radar.Pc(), 2e-6),
    WaveformSpec("pc10", radar.Pc(), 10e-6),
    WaveformSpec("lfm10", radar.Lfm(4e6), 10e-6),
    WaveformSpec("barker13", radar.BarkerPm(), 10e-6),
)


@dataclass(frozen=True)
class ScenarioConfig:
    """Desk-scale defaults; paper-scale counts are one override away."""

    train_per_class: int = 4000
    test_per_class: int = 1000
    waveforms: tuple[WaveformSpec, ...] = TABLE_WAVEFORMS
    carrier_offsets_hz: tuple[float, ...] = CARRIER_OFFSETS_HZ
    class0_mix: tuple[float, float, float] = (1 / 3, 1 / 3, 1 / 3)
    class1_mix: tuple[float, float, float] = (1 / 3, 1 / 3, 1 / 3)
    sample_rate_hz: float = 20e6
    pri_s: float = 1e-3
    radar_peak_amplitude: float = 1.0
    psnr_range_db: tuple[float, float] = (9.0, 28.0)
    su_power_range: tuple[float, float] = (0.05, 1.0)
    multipath_delay_range: tuple[int, int] = (1, 8)
    multipath_mag_range: tuple[float, float] = (0.0, 0.5)
    min_visible_samples: int = 8
    seed: int = 0

    def __post_init__(self):
        if self.train_per_class < 1 or self.test_per_class < 1:
            raise ValueError("per-class counts must be positive")
        for mixp in (self.class0_mix, self.class1_mix):
            if len(mixp) != 3 or any(p < 0 for p in mixp) or not math.isclose(sum(mixp), 1.0):
                raise ValueError("subcase mix must be three non-negative weights summing to 1")
        if not self.waveforms:
            raise ValueError("at least one waveform required")
        if self.min_visible_samples < 1:
            raise ValueError("min_visible_samples must be >= 1")


@dataclass(frozen=True)
class ManifestEntry:
    path: str
    label: int
    provenance: str
    waveform: str | None = None
    carrier_offset_hz: float | None = None
    psnr_db: float | None = None


@dataclass(frozen=True)
class DatasetManifest:
    split: str
    seed: int
    entries: tuple[ManifestEntry, ...]

    def __post_init__(self):
        if self.split not in ("train", "test"):
            raise ValueError("split must be 'train' or 'test'")


@dataclass(frozen=True)
class BuiltDataset:
    train: DatasetManifest
    test: DatasetManifest


_SPLIT_CODE = {"train": 0, "test": 1, "psnr": 2}


def _entry_rng(seed: int, split: str, index: int) -> np.random.Generator:
    return np.random.default_rng([seed, _SPLIT_CODE[split], index])


def _choice(rng, options, weights=None):
    idx = rng.choice(len(options), p=weights)
    return options[int(idx)]


def _log_uniform(rng, lo: float, hi: float) -> float:
    if lo <= 0 or hi <= 0:
        raise ValueError("log-uniform range must be positive")
    return float(np.exp(rng.uniform(np.log(lo), np.log(hi))))


def _radar_window(cfg: ScenarioConfig, rng, waveform: WaveformSpec, offset_hz: float,
                  use_multipath: bool = True) -> tuple[SampleStream, dict]:
    """A 1024-sample window around the second pulse of a short train, with
    >= min_visible_samples of pulse guaranteed inside.

    Windowing the second pulse (not the first, which sits at the stream
    head) lets the pulse land anywhere in the chunk, including partially
    clipped at either edge.
    """
    fs = cfg.sample_rate_hz
    params = radar.RadarParams(
        ipm=waveform.ipm,
        pw_s=waveform.pw_s,
        pri_s=cfg.pri_s,
        carrier_offset_hz=offset_hz,
        amplitude_profile=radar.Constant(cfg.radar_peak_amplitude),
    )
    margin_s = (CHUNK_LEN + round(waveform.pw_s * fs) + 64) / fs
    stream = radar.synth_pulse_train(
        params, cfg.pri_s + margin_s, fs, seed=rng.integers(2**63)
    )
    if use_multipath:
        mag = rng.uniform(*cfg.multipath_mag_range)
        if mag > 0:
            delay = int(rng.integers(cfg.multipath_delay_range[0], cfg.multipath_delay_range[1] + 1))
            phase = rng.uniform(0, 2 * np.pi)
            stream = apply_multipath(stream, ((0, 1.0 + 0j), (delay, mag * np.exp(1j * phase))))
    ann = stream.annotations[1]
    vis = cfg.min_visible_samples
    lo = max(0, ann.start_idx + vis - CHUNK_LEN)
    hi = min(len(stream) - CHUNK_LEN, ann.start_idx + ann.length - vis)
    start = int(rng.integers(lo, hi + 1)) if hi > lo else lo
    meta = {"waveform": waveform.name, "carrier_offset_hz": offset_hz}
    return stream_window(stream, start, CHUNK_LEN), meta


def _su_window(cfg: ScenarioConfig, rng, kind: str, power: float, prefer_burst: bool) -> SampleStream:
    """A 1024-sample window sliced from a longer secondary-user stream."""
    n_span = 8192
    duration = n_span / cfg.sample_rate_hz
    if kind == "wlan":
        stream = emitters.synth_wlan(
            emitters.WlanParams(power=power), duration, cfg.sample_rate_hz,
            seed=rng.integers(2**63),
        )
    elif kind == "lte":
        stream = emitters.synth_lte(
            emitters.LteParams(power=power, load=rng.uniform(0.2, 1.0)),
            duration, cfg.sample_rate_hz, seed=rng.integers(2**63),
        )
    else:
        raise ValueError(f"unknown SU kind {kind!r}")
    if prefer_burst and stream.annotations:
        ann = _choice(rng, stream.annotations)
        lo = max(0, ann.start_idx - CHUNK_LEN + CHUNK_LEN // 4)
        hi = min(len(stream) - CHUNK_LEN, ann.end_idx - CHUNK_LEN // 4)
        start = int(rng.integers(lo, hi + 1)) if hi > lo else lo
        start = min(max(start, 0), len(stream) - CHUNK_LEN)
    else:
        start = int(rng.integers(0, len(stream) - CHUNK_LEN + 1))
    return stream_window(stream, start, CHUNK_LEN)


def synth_entry_chunk(cfg: ScenarioConfig, split: str, index: int, label: int) -> tuple[IqChunk, dict]:
    """Deterministically synthesize one labeled chunk from (config, split, index)."""
    rng = _entry_rng(cfg.seed, split, index)
    noise_power = cfg.radar_peak_amplitude**2 / 10 ** (rng.uniform(*cfg.psnr_range_db) / 10)
    meta: dict = {"waveform": None, "carrier_offset_hz": None}
    parts: list[SampleStream] = []
    if label == 0:
        subcase = _choice(rng, CLASS0_SUBCASES, cfg.class0_mix)
        waveform = _choice(rng, cfg.waveforms)
        offset = _choice(rng, cfg.carrier_offsets_hz)
        window, meta = _radar_window(cfg, rng, waveform, offset)
        parts.append(window)
        if subcase != "radar-only":
            power = cfg.radar_peak_amplitude**2 * _log_uniform(rng, *cfg.su_power_range)
            parts.append(_su_window(cfg, rng, subcase.split("+")[1], power, prefer_burst=False))
    else:
        subcase = _choice(rng, CLASS1_SUBCASES, cfg.class1_mix)
        if subcase != "noise":
            power = cfg.radar_peak_amplitude**2 * _log_uniform(rng, *cfg.su_power_range)
            kind = subcase.split("-")[0]
            parts.append(_su_window(cfg, rng, kind, power, prefer_burst=True))
        else:
            parts.append(
                SampleStream(np.zeros(CHUNK_LEN, dtype=np.complex128), cfg.sample_rate_hz)
            )
    mixed = mix(parts, noise_power=noise_power, seed=rng.integers(2**63))
    chunk = chunk_stream(mixed, CHUNK_LEN, provenance=subcase)[0]
    if label == 0 and int(chunk.radar_mask.sum()) < cfg.min_visible_samples:
        raise RuntimeError("class-0 chunk lost pulse visibility")  # guarded by window choice
    if chunk.label != label:
        raise RuntimeError("synthesized chunk label mismatch")
    return chunk, meta


def iter_split(cfg: ScenarioConfig, split: str):
    """Yield (index, chunk, meta) for one split, class-balanced and deterministic."""
    per_class = cfg.train_per_class if split == "train" else cfg.test_per_class
    for index in range(2 * per_class):
        label = index % 2
        chunk, meta = synth_entry_chunk(cfg, split, index, label)
        yield index, chunk, meta


def chunk_to_stream(chunk: IqChunk, sample_rate_hz: float = 20e6) -> SampleStream:
    """Wrap one chunk as a stream, rebuilding annotations from mask runs."""
    mask = chunk.radar_mask
    edges = np.flatnonzero(np.diff(np.concatenate(([False], mask, [False]))))
    annotations = []
    for lo, hi in zip(edges[0::2], edges[1::2]):
        peak = float(np.abs(chunk.samples[lo:hi]).max())
        annotations.append(PulseAnnotation(int(lo), int(hi - lo), Emitter.RADAR, peak))
    return SampleStream(chunk.samples, sample_rate_hz, tuple(annotations))


def load_chunk(root, entry: ManifestEntry) -> IqChunk:
    stream = read_iq_file(Path(root) / entry.path)
    mask = radar_mask(stream.annotations, len(stream))
    return make_chunk(stream.samples, mask, entry.provenance)


def build_dataset(cfg: ScenarioConfig, out_dir) -> BuiltDataset:
    """Synthesize all chunks, write payloads and manifests under ``out_dir``."""
    out_dir = Path(out_dir)
    (out_dir / "chunks").mkdir(parents=True, exist_ok=True)
    manifests = {}
    for split in ("train", "test"):
        entries = []
        for index, chunk, meta in iter_split(cfg, split):
            rel = f"chunks/{split}_{index:06d}.iq"
            write_iq_file(chunk_to_stream(chunk, cfg.sample_rate_hz), out_dir / rel)
            entries.append(
                ManifestEntry(
                    path=rel,
                    label=chunk.label,
                    provenance=chunk.provenance,
                    waveform=meta["waveform"],
                    carrier_offset_hz=meta["carrier_offset_hz"],
                )
            )
        manifest = DatasetManifest(split, cfg.seed, tuple(entries))
        save_manifest(manifest, out_dir / f"manifest_{split}.json")
        manifests[split] = manifest
    return BuiltDataset(train=manifests["train"], test=manifests["test"])


def save_manifest(manifest: DatasetManifest, path) -> None:
    doc = {
        "split": manifest.split,
        "seed": manifest.seed,
        "entries": [
            {
                "path": e.path,
                "label": e.label,
                "provenance": e.provenance,
                "waveform": e.waveform,
                "carrier_offset_hz": e.carrier_offset_hz,
                "psnr_db": e.psnr_db,
            }
            for e in manifest.entries
        ],
    }
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_manifest(path) -> DatasetManifest:
    with open(path) as fh:
        doc = json.load(fh)
    entries = tuple(
        ManifestEntry(
            path=e["path"],
            label=e["label"],
            provenance=e["provenance"],
            waveform=e.get("waveform"),
            carrier_offset_hz=e.get("carrier_offset_hz"),
            psnr_db=e.get("psnr_db"),
        )
        for e in doc["entries"]
    )
    return DatasetManifest(doc["split"], doc["seed"], entries)


def estimate_psnr(chunks) -> float:
    """Pooled mask-true mean power over mask-false mean power, in dB."""
    sig_power = sig_count = rest_power = rest_count = 0.0
    for chunk in chunks:
        power = np.abs(chunk.samples) ** 2
        mask = chunk.radar_mask
        sig_power += float(power[mask].sum())
        sig_count += int(mask.sum())
        rest_power += float(power[~mask].sum())
        rest_count += int((~mask).sum())
    if sig_count == 0:
        raise ValueError("no radar-marked samples in the set")
    signal = sig_power / sig_count
    rest = rest_power / rest_count if rest_count else 0.0
    if rest == 0.0:
        return math.inf
    return 10.0 * math.log10(signal / rest)


@dataclass(frozen=True)
class PsnrSet:
    waveform: str
    target_psnr_db: float
    measured_psnr_db: float
    chunks: tuple[IqChunk, ...]


def build_psnr_sets(
    waveforms: tuple[WaveformSpec, ...],
    targets_db,
    chunks_per_set: int,
    seed: int = 0,
    *,
    carrier_offsets_hz: tuple[float, ...] = CARRIER_OFFSETS_HZ,
    sample_rate_hz: float = 20e6,
    pri_s: float = 1e-3,
    peak_amplitude: float = 1.0,
) -> list[PsnrSet]:
    """Radar+noise chunk sets with noise power solved from each target PSNR."""
    cfg = ScenarioConfig(
        train_per_class=1,
        test_per_class=1,
        waveforms=waveforms,
        carrier_offsets_hz=carrier_offsets_hz,
        sample_rate_hz=sample_rate_hz,
        pri_s=pri_s,
        radar_peak_amplitude=peak_amplitude,
        seed=seed,
    )
    sets = []
    index = 0
    for waveform in waveforms:
        for target in targets_db:
            noise_power = (
                0.0 if math.isinf(target) and target > 0
                else peak_amplitude**2 / 10 ** (target / 10)
            )
            chunks = []
            for _ in range(chunks_per_set):
                rng = _entry_rng(seed, "psnr", index)
                index += 1
                offset = _choice(rng, carrier_offsets_hz)
                window, _ = _radar_window(cfg, rng, waveform, offset, use_multipath=False)
                mixed = mix([window], noise_power=noise_power, seed=rng.integers(2**63))
                chunks.append(chunk_stream(mixed, CHUNK_LEN, provenance="radar+noise")[0])
            sets.append(
                PsnrSet(
                    waveform=waveform.name,
                    target_psnr_db=float(target),
                    measured_psnr_db=estimate_psnr(chunks),
                    chunks=tuple(chunks),
                )
            )
    return sets
