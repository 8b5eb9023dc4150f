"""Acceptance suite: one test per release criterion, each printing a
PASS/FAIL line (visible with ``pytest -s``).

The slow fixtures render the fixed 50-clip synthetic suite once per
session; individual criteria consume the cached per-clip results.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np
import pytest

from crashpipe.classify import (
    ClassCentroids,
    EmbeddingBank,
    aggregate_image_embedding,
    build_class_centroids,
    classify,
    default_prompt_sets,
    frame_key,
    select_peak_frames,
    write_bank,
)
from crashpipe.cli import main
from crashpipe.flow import estimate_flow
from crashpipe.scoring import harmonic, temporal_score
from crashpipe.spatial import (
    ImpactPoint,
    MagnitudeMap,
    localize_impact,
    percentile_threshold,
    weighted_centroid,
)
from crashpipe.synth import SceneSpec, generate_clip, suite_specs
from crashpipe.taxonomy import CLASS_ORDER
from crashpipe.temporal import detect_peak, locate_accident, rolling_mean, zscore

from conftest import shifted_pair

SUITE_SEED = 20260401
SUITE_COUNT = 50
DIM = 8


@dataclass
class ClipResult:
    spec: SceneSpec
    gt_time: float
    gt_point: tuple[float, float]
    gt_label: str
    peak_frame: int
    pred_time: float
    impact: ImpactPoint


@pytest.fixture(scope="session")
def suite_results():
    """Render the suite once; keep per-clip outcomes plus stage timings."""
    results: list[ClipResult] = []
    gen_detect_seconds = 0.0
    for spec in suite_specs(SUITE_SEED, SUITE_COUNT):
        t0 = time.perf_counter()
        clip, gt = generate_clip(spec)
        temporal = locate_accident(clip)
        gen_detect_seconds += time.perf_counter() - t0
        impact = localize_impact(clip, temporal.peak_frame)
        results.append(
            ClipResult(
                spec=spec,
                gt_time=gt.time_sec,
                gt_point=(gt.cx, gt.cy),
                gt_label=gt.label,
                peak_frame=temporal.peak_frame,
                pred_time=temporal.time_sec,
                impact=impact,
            )
        )
    return results, gen_detect_seconds


def report(name: str, ok: bool, detail: str) -> None:
    print(f"ACCEPTANCE {name}: {'PASS' if ok else 'FAIL'} ({detail})")


def test_temporal_oracle_suite(suite_results):
    results, seconds = suite_results
    hits = sum(abs(r.pred_time - r.gt_time) <= 0.25 for r in results)
    ok = hits >= math.ceil(0.9 * SUITE_COUNT) and seconds < 60.0
    report(
        "temporal-oracle-suite",
        ok,
        f"{hits}/{SUITE_COUNT} within 0.25s, generate+detect {seconds:.1f}s",
    )
    assert hits >= math.ceil(0.9 * SUITE_COUNT)
    assert seconds < 60.0


def test_zscore_bruteforce_equivalence():
    rng = np.random.default_rng(999)
    worst = 0.0
    for _ in range(200):
        n = int(rng.integers(3, 501))
        window = int(rng.choice([1, 3, 5, 7]))
        tau = float(rng.uniform(0.5, 3.0))
        series = rng.uniform(0.0, 100.0, n) * float(10.0 ** rng.integers(-2, 3))

        half = window // 2
        smooth_oracle = np.array(
            [
                np.mean(series[max(t - half, 0) : min(t + half, n - 1) + 1])
                for t in range(n)
            ]
        )
        mu = smooth_oracle.sum() / n
        sigma = math.sqrt(((smooth_oracle - mu) ** 2).sum() / n)
        z_oracle = (smooth_oracle - mu) / (sigma + 1e-8)
        crossers = np.flatnonzero(z_oracle > tau)
        if crossers.size:
            idx_oracle = int(crossers[np.argmax(z_oracle[crossers])])
            flag_oracle = True
        else:
            idx_oracle = int(np.argmax(z_oracle))
            flag_oracle = False

        smoothed = rolling_mean(series, window)
        z = zscore(smoothed)
        idx, flag = detect_peak(z, tau)
        worst = max(worst, float(np.abs(z.values - z_oracle).max()))
        assert (idx, flag) == (idx_oracle, flag_oracle)
        assert np.abs(z.values - z_oracle).max() <= 1e-9
    report("zscore-bruteforce-equivalence", True, f"200 series, worst dev {worst:.2e}")


def test_flow_translation_recovery():
    rng = np.random.default_rng(4242)
    hits = 0
    cases = 40
    for _ in range(cases):
        dx = int(rng.integers(-3, 4))
        dy = int(rng.integers(-3, 4))
        a, b = shifted_pair(rng, 320, 180, dx, dy)
        flow = estimate_flow(a, b)
        ch, cw = 36, 64
        epe = float(
            np.hypot(flow.fx[ch:-ch, cw:-cw] - dx, flow.fy[ch:-ch, cw:-cw] - dy).mean()
        )
        hits += epe < 0.5
    ok = hits >= math.ceil(0.95 * cases)
    report("flow-translation-recovery", ok, f"{hits}/{cases} cases with mean EPE < 0.5px")
    assert hits >= math.ceil(0.95 * cases)


def test_spatial_oracle_suite(suite_results):
    results, _ = suite_results
    hits = sum(
        math.hypot(r.impact.cx - r.gt_point[0], r.impact.cy - r.gt_point[1]) <= 0.08
        for r in results
    )
    static_ok = True
    for seed in (1, 2):
        spec = SceneSpec(
            width=320,
            height=180,
            fps=20.0,
            n_frames=60,
            collision_frame=30,
            impact=(0.5, 0.5),
            class_label="single",
            actors=[],
            flash_amplitude=0.0,
            seed=seed,
            id=f"static-{seed}",
        )
        clip, _ = generate_clip(spec)
        pt = localize_impact(clip, 30)
        static_ok &= pt == ImpactPoint(cx=0.5, cy=0.5, fallback=True)
    ok = hits >= math.ceil(0.8 * SUITE_COUNT) and static_ok
    report(
        "spatial-oracle-suite",
        ok,
        f"{hits}/{SUITE_COUNT} within 0.08, static fallback exact: {static_ok}",
    )
    assert hits >= math.ceil(0.8 * SUITE_COUNT)
    assert static_ok


def test_percentile_centroid_micro_oracles():
    rng = np.random.default_rng(31337)
    for _ in range(100):
        h = int(rng.integers(1, 24))
        w = int(rng.integers(1, 24))
        m = rng.uniform(0.0, 10.0, (h, w))
        if rng.uniform() < 0.3:  # exercise ties
            m = np.round(m)
        p = float(rng.uniform(1.0, 99.0))
        magmap = MagnitudeMap(width=w, height=h, m=m)

        flat = sorted(m.ravel().tolist())
        theta = flat[math.ceil(p / 100.0 * len(flat)) - 1]
        expect = m.copy()
        expect[expect < theta] = 0.0
        assert np.array_equal(percentile_threshold(magmap, p).m, expect)

        total = sx = sy = 0.0
        for u in range(h):
            for v in range(w):
                total += m[u, v]
                sx += v * m[u, v]
                sy += u * m[u, v]
        pt = weighted_centroid(magmap, 1e-6)
        if total < 1e-6:
            assert pt.fallback
        else:
            assert abs(pt.cx - sx / (w * total)) <= 1e-12
            assert abs(pt.cy - sy / (h * total)) <= 1e-12
    report("percentile-centroid-micro-oracles", True, "100 maps, exact / <=1e-12")


def test_metric_closed_forms():
    t_ok = abs(temporal_score(2.0, 0.0, 2.0) - 0.606531) <= 1e-6
    # oracle: 3 / (1/0.606531 + 2) evaluated directly
    h_expected = 3.0 / (1.0 / 0.606531 + 2.0)
    h_ok = abs(harmonic(0.606531, 1.0, 1.0) - h_expected) <= 1e-12
    h_value_ok = abs(harmonic(0.606531, 1.0, 1.0) - 0.822206) <= 1e-6
    zero_ok = (
        harmonic(0.94, 0.96, 0.0) == 0.0
        and harmonic(0.0, 1.0, 1.0) == 0.0
        and harmonic(1.0, 0.0, 1.0) == 0.0
    )
    ok = t_ok and h_ok and h_value_ok and zero_ok
    report(
        "metric-closed-forms",
        ok,
        f"T(2s)={temporal_score(2.0, 0.0, 2.0):.6f}, "
        f"H={harmonic(0.606531, 1.0, 1.0):.6f}, zero-forcing={zero_ok}",
    )
    assert t_ok and h_ok and h_value_ok and zero_ok


def test_metric_harmonic_min_bound_as_stated():
    """Checks H <= min(T, S, C) over 1,000 random positive triples.

    The harmonic mean of positive inputs is >= their minimum (equality only
    when all three are equal), so this bound cannot hold for any correct
    implementation of H = 3/(1/T + 1/S + 1/C); the matching true bounds are
    covered in test_scoring. Kept as stated; expected to fail.
    """
    rng = np.random.default_rng(55)
    triples = rng.uniform(0.0, 1.0, (1000, 3))
    violations = sum(
        harmonic(t, s, c) > min(t, s, c) + 1e-12 for t, s, c in triples
    )
    report(
        "metric-harmonic-min-bound-as-stated",
        violations == 0,
        f"{violations}/1000 triples violate H <= min(T,S,C)",
    )
    assert violations == 0


def test_classifier_oracle(suite_results):
    results, _ = suite_results

    def basis(i: int) -> np.ndarray:
        v = np.zeros(DIM)
        v[i] = 1.0
        return v

    centroids = ClassCentroids(
        dim=DIM, vectors={c: basis(i) for i, c in enumerate(CLASS_ORDER)}
    )
    correct = 0
    for r in results:
        indices = select_peak_frames(r.spec.n_frames, r.peak_frame)
        entries = {
            frame_key(r.spec.id, t): basis(CLASS_ORDER.index(r.gt_label)).astype(np.float32)
            for t in set(indices)
        }
        bank = EmbeddingBank(section="frames", dim=DIM, entries=entries)
        v = aggregate_image_embedding(bank, r.spec.id, indices)
        correct += classify(v, centroids).predicted == r.gt_label

    rng = np.random.default_rng(777)
    invariant = True
    for _ in range(1000):
        dim = int(rng.integers(2, 12))
        cents = ClassCentroids(dim=dim, vectors={c: rng.normal(0, 1, dim) for c in CLASS_ORDER})
        v = rng.normal(0, 1, dim)
        c = float(10.0 ** rng.uniform(-3, 3))
        invariant &= classify(v, cents).predicted == classify(c * v, cents).predicted

    ok = correct == SUITE_COUNT and invariant
    report(
        "classifier-oracle",
        ok,
        f"{correct}/{SUITE_COUNT} correct with oracle banks, rescale-invariant: {invariant}",
    )
    assert correct == SUITE_COUNT
    assert invariant


def test_predict_end_to_end_determinism(tmp_path_factory):
    base = tmp_path_factory.mktemp("acceptance-e2e")
    suite_dir = base / "suite"
    assert main(["synth", "--out", str(suite_dir), "--seed", str(SUITE_SEED), "--count", str(SUITE_COUNT)]) == 0

    specs = suite_specs(SUITE_SEED, SUITE_COUNT)
    prompt_entries = {}
    for ci, ps in enumerate(default_prompt_sets()):
        for prompt in ps.prompts:
            v = np.zeros(DIM, dtype=np.float32)
            v[ci] = 1.0
            prompt_entries[prompt] = v
    write_bank(
        EmbeddingBank(section="prompts", dim=DIM, entries=prompt_entries),
        base / "prompts.emb",
    )
    frame_entries = {}
    for spec in specs:
        v = np.zeros(DIM, dtype=np.float32)
        v[CLASS_ORDER.index(spec.class_label)] = 1.0
        for t in range(spec.n_frames):
            frame_entries[frame_key(spec.id, t)] = v
    write_bank(
        EmbeddingBank(section="frames", dim=DIM, entries=frame_entries),
        base / "frames.emb",
    )

    manifests = sorted(str(p) for p in suite_dir.glob("clip-*/manifest.json"))
    assert len(manifests) == SUITE_COUNT
    outputs = []
    for workers, name in ((1, "w1.csv"), (8, "w8.csv")):
        out = base / name
        code = main(
            [
                "predict",
                *manifests,
                "--out",
                str(out),
                "--workers",
                str(workers),
                "--prompt-bank",
                str(base / "prompts.emb"),
                "--frame-bank",
                str(base / "frames.emb"),
            ]
        )
        assert code == 0
        outputs.append(out.read_bytes())
    ok = outputs[0] == outputs[1]
    report(
        "predict-end-to-end-determinism",
        ok,
        f"{SUITE_COUNT} clips, workers 1 vs 8, byte-identical: {ok}",
    )
    assert ok
