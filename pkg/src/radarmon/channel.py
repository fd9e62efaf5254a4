"""Channel impairments: carrier frequency offset, multipath dispersion, mixing with AWGN."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .iqcore import Emitter, PulseAnnotation, SampleStream


@dataclass(frozen=True)
class ChannelSpec:
    """Sparse integer-delay FIR channel plus receiver-referred CFO, gain and noise."""

    cfo_hz: float = 0.0
    taps: tuple[tuple[int, complex], ...] = ((0, 1.0 + 0j),)
    gain: float = 1.0
    noise_power: float = 0.0

    def __post_init__(self):
        if not self.taps:
            raise ValueError("channel requires at least one tap")
        if self.taps[0][0] != 0:
            raise ValueError("first tap must have delay 0")
        if any(d < 0 for d, _ in self.taps):
            raise ValueError("tap delays must be non-negative")
        if self.noise_power < 0:
            raise ValueError("noise_power must be >= 0")


def apply_cfo(stream: SampleStream, cfo_hz: float) -> SampleStream:
    """Rotate samples by the carrier offset; magnitudes and annotations unchanged."""
    if abs(cfo_hz) >= stream.sample_rate_hz / 2:
        raise ValueError("CFO must be below Nyquist")
    if cfo_hz == 0:
        return stream
    n = np.arange(len(stream))
    rotated = stream.samples * np.exp(2j * np.pi * n * cfo_hz / stream.sample_rate_hz)
    return SampleStream(
        samples=rotated,
        sample_rate_hz=stream.sample_rate_hz,
        annotations=stream.annotations,
    )


def _merge_per_emitter(annotations) -> tuple[PulseAnnotation, ...]:
    """Sort by start index and merge same-emitter overlaps."""
    merged: list[PulseAnnotation] = []
    last: dict[Emitter, int] = {}
    for ann in sorted(annotations, key=lambda a: (a.start_idx, a.emitter.value)):
        idx = last.get(ann.emitter)
        if idx is not None and ann.start_idx < merged[idx].end_idx:
            prev = merged[idx]
            merged[idx] = PulseAnnotation(
                prev.start_idx,
                max(prev.end_idx, ann.end_idx) - prev.start_idx,
                prev.emitter,
                max(prev.peak_amplitude, ann.peak_amplitude),
            )
        else:
            last[ann.emitter] = len(merged)
            merged.append(ann)
    return tuple(sorted(merged, key=lambda a: (a.start_idx, a.emitter.value)))


def apply_multipath(
    stream: SampleStream, taps: tuple[tuple[int, complex], ...]
) -> SampleStream:
    """Convolve with a sparse FIR; output truncated to the input length.

    Annotations are lengthened by the maximum tap delay (pulse dispersion).
    """
    if not taps or taps[0][0] != 0:
        raise ValueError("taps must start at delay 0")
    n = len(stream)
    max_delay = max(d for d, _ in taps)
    if max_delay >= n:
        raise ValueError("tap delay exceeds stream length")
    out = np.zeros(n, dtype=np.complex128)
    for delay, gain in taps:
        if delay:
            out[delay:] += gain * stream.samples[: n - delay]
        else:
            out += gain * stream.samples
    anns = [
        PulseAnnotation(
            a.start_idx,
            min(a.length + max_delay, n - a.start_idx),
            a.emitter,
            a.peak_amplitude,
        )
        for a in stream.annotations
    ]
    return SampleStream(
        samples=out,
        sample_rate_hz=stream.sample_rate_hz,
        annotations=_merge_per_emitter(anns),
    )


def mix(
    streams: list[SampleStream],
    gains: list[float] | None = None,
    noise_power: float = 0.0,
    seed=0,
) -> SampleStream:
    """Weighted sample-wise sum of aligned streams plus AWGN.

    The union of all input annotations is retained (same-emitter overlaps merged).
    """
    if not streams:
        raise ValueError("mix requires at least one stream")
    if gains is None:
        gains = [1.0] * len(streams)
    if len(gains) != len(streams):
        raise ValueError("gains must match streams")
    n = len(streams[0])
    fs = streams[0].sample_rate_hz
    for s in streams[1:]:
        if len(s) != n or s.sample_rate_hz != fs:
            raise ValueError("mixed streams must share length and sample rate")
    out = np.zeros(n, dtype=np.complex128)
    for g, s in zip(gains, streams):
        out += g * s.samples
    if noise_power > 0:
        rng = np.random.default_rng(seed)
        out += np.sqrt(noise_power / 2.0) * (
            rng.standard_normal(n) + 1j * rng.standard_normal(n)
        )
    anns = [a for s in streams for a in s.annotations]
    return SampleStream(
        samples=out, sample_rate_hz=fs, annotations=_merge_per_emitter(anns)
    )
