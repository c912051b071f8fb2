"""Compare the compiled and numpy kernel backends.

    python benchmarks/bench_kernels.py [--repeat N]

Times batched symmetrized KL, the overlap sweep and BetaNMS on a 2000-detection
synthetic crowd, once per backend.
"""

import argparse
import time
from unittest import mock

import numpy as np

from betarep import _backend, divergence, nms
from betarep.divergence import pack
from betarep.nms import NmsConfig, greedy_nms
from betarep.synth import SynthConfig, synth_detections, synth_scenes


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def crowd():
    (scene,) = synth_scenes(SynthConfig(seed=3, n_scenes=1, persons=(20, 20), overlap=0.9))
    return synth_detections(scene, 100, seed=1)


def run(kern, dets, repeat):
    peds = pack([d.pedestrian for d in dets])
    boxes = peds[:, :4]
    pairs = kern.overlap_pairs(boxes)
    sample = pairs[:20000]
    cfg = NmsConfig(strategy="beta")
    with mock.patch.object(divergence, "kernels", kern), mock.patch.object(nms, "kernels", kern):
        t_nms = best_of(lambda: greedy_nms(dets, cfg), repeat)
    return {
        "sym_kl (20k pairs)": best_of(lambda: kern.sym_kl_pairs(peds, sample, 128, 1e-12), repeat),
        f"overlap_pairs ({len(pairs)} pairs)": best_of(lambda: kern.overlap_pairs(boxes), repeat),
        "BetaNMS (2000 dets)": t_nms,
    }


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    dets = crowd()
    backends = [_backend.python_kernels]
    compiled = _backend.compiled_kernels()
    if compiled is None:
        print("compiled kernels not built; timing the numpy fallback only")
    else:
        backends.insert(0, compiled)
    results = {k.NAME: run(k, dets, args.repeat) for k in backends}
    names = list(next(iter(results.values())))
    print(f"{'kernel':28s}" + "".join(f"{b:>12s}" for b in results) + ("     speedup" if len(results) == 2 else ""))
    for n in names:
        row = [results[b][n] for b in results]
        line = f"{n:28s}" + "".join(f"{t:11.3f}s" for t in row)
        if len(row) == 2:
            line += f"{row[1] / row[0]:11.1f}x"
        print(line)
    if len(results) == 2:
        peds = pack([d.pedestrian for d in dets])
        pairs = compiled.overlap_pairs(peds[:, :4])[:2000]
        a = compiled.sym_kl_pairs(peds, pairs, 128, 1e-12)
        b = _backend.python_kernels.sym_kl_pairs(peds, pairs, 128, 1e-12)
        print(f"max relative difference between backends: {np.max(np.abs(a - b) / np.maximum(np.abs(b), 1e-12)):.1e}")


if __name__ == "__main__":
    main()
