"""Train a small pointer network and score it.

A few minutes on one core: 300 single- and two-room layouts, a 64-unit
network, then beam-search decoding on held-out layouts and a report in the
ordering / input_length / mean_iou layout.  Raise ``--steps`` and the sample
count for anything beyond a smoke run.

    python demos/03_train_and_evaluate.py [steps]
"""
import sys
import time

from roomcloud.evalbench import EvalResult, evaluate_sample, report
from roomcloud.ptrnet import PtrNetConfig, beam_decode, decode_rooms, train
from roomcloud.synthgen import GenConfig, build_sample


def main(steps=600):
    steps = int(steps)
    gen = GenConfig(max_rooms=2, p_n=100)
    runs = []
    for ordering in ("truesort", "pseudosort"):
        t0 = time.time()
        train_set = [build_sample(gen.replace(seed=1), i, ordering) for i in range(300)]
        val_set = [build_sample(gen.replace(seed=2), i, ordering) for i in range(40)]
        cfg = PtrNetConfig(hidden=64, attn=64, max_steps=steps, k_max=gen.max_rooms,
                           dtype="float32")
        res = train([(s.points, s.labels) for s in train_set], cfg)
        print(f"{ordering}: loss {res.losses[0]:.1f} -> {res.losses[-1]:.1f} "
              f"in {time.time() - t0:.0f}s")

        samples = []
        for i, s in enumerate(val_set):
            dec = beam_decode(res.params, s.points, cfg.b, cfg.k_max, cfg.beam_width)
            rooms = decode_rooms(dec.indices, s.points, cfg.b)
            samples.append(evaluate_sample(rooms, s.rooms, s.shape_tags, i))
        runs.append(EvalResult(samples=samples, ordering=ordering, input_length=gen.p_n))

    print()
    print(report(runs), end="")


if __name__ == "__main__":
    main(*sys.argv[1:])
