"""Synthetic layouts and the three input orderings.

Generates a few scenes, shows which room shapes came out, and compares the
three orderings of the same wall points.  The label polygon (border points
snapped onto the wall points) is what a perfect network would emit; its IoU
with the true room is the ceiling any trained model can reach.

    python demos/02_synthetic_layouts.py
"""
import numpy as np

from roomcloud.evalbench import evaluate_sample, mean_iou
from roomcloud.synthgen import GenConfig, build_sample


def path_length(points):
    return float(np.linalg.norm(np.diff(points, axis=0), axis=1).sum())


def main():
    cfg = GenConfig(seed=5, p_n=300)
    for index in range(3):
        s = build_sample(cfg, index, "pseudosort")
        print(f"scene {index}: {s.k_rooms} rooms, shapes {', '.join(s.shape_tags)}")

    # same scenes and points under every ordering; only the sequence differs
    print("\nordering      mean step between consecutive points")
    for ordering in ("random", "pseudosort", "truesort"):
        steps = [path_length(build_sample(cfg, i, ordering).points) / (cfg.p_n - 1)
                 for i in range(20)]
        print(f"{ordering:<12}  {np.mean(steps):.4f}")

    for p_n in (100, 300):
        c = cfg.replace(p_n=p_n)
        results = []
        for i in range(50):
            s = build_sample(c, i, "truesort")
            label_polys = [s.points[s.labels[k * s.b:(k + 1) * s.b]] for k in range(s.k_rooms)]
            results.append(evaluate_sample(label_polys, s.rooms, s.shape_tags, i))
        print(f"\nlabel-polygon IoU ceiling at p_n={p_n}: {mean_iou(results):.3f}")


if __name__ == "__main__":
    main()
