"""``roomcloud`` command line: gen-data, walls, train, infer, eval.

Settings resolve as flag > ``--config`` file (``key = value`` lines, keys are
flag names) > ``ROOMCLOUD_SEED`` (seed only) > built-in default.  Exit codes:
0 success, 1 usage error, 2 data error, 3 numeric failure.
"""
from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from roomcloud.errors import NumericError, RoomcloudError

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 1, 2, 3

# output locations are not part of an artifact's provenance
# and neither is the worker count, which never changes the bytes written
_NOT_PROVENANCE = {"command", "config", "out", "checkpoint", "log", "masks", "render", "resume",
                   "func", "sidecar", "jobs"}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _env_seed(default=0) -> int:
    raw = os.environ.get("ROOMCLOUD_SEED")
    if raw is None or raw.strip() == "":
        return default
    try:
        return int(raw)
    except ValueError:
        raise UsageError(f"ROOMCLOUD_SEED must be an integer, got {raw!r}") from None


def read_config_file(path) -> dict:
    out = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise UsageError(f"{path}:{lineno}: expected 'key = value'")
            k, v = (s.strip() for s in line.split("=", 1))
            out[k.replace("-", "_")] = v
    return out


def write_config_file(path, settings: dict) -> None:
    """Write ``settings`` (e.g. an artifact's embedded run_config) as a config file."""
    lines = []
    for k, v in sorted(settings.items()):
        if k == "command" or v is None:
            continue
        if isinstance(v, bool):
            v = "true" if v else "false"
        elif isinstance(v, (list, tuple)):
            v = ",".join(str(x) for x in v)
        lines.append(f"{k} = {v}")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def _shape_weights(text):
    out = {}
    for part in text.split(","):
        if not part.strip():
            continue
        k, _, v = part.partition("=")
        out[k.strip()] = float(v) if v else 1.0
    return out


def run_config(args) -> dict:
    d = {k: v for k, v in vars(args).items() if k not in _NOT_PROVENANCE}
    d["command"] = args.command
    return d


# ---------------------------------------------------------------- gen-data

def cmd_gen_data(args) -> int:
    from roomcloud.synthgen import GenConfig, generate_dataset
    cfg = GenConfig(
        max_rooms=args.max_rooms, edge_len_range=(args.edge_min, args.edge_max),
        canvas=args.canvas, b=args.b, p_n=args.p_n, shrink=args.shrink,
        jitter_prob=args.jitter, dropout_prob=args.dropout,
        shape_weights=_shape_weights(args.shape_weights), seed=args.seed,
    )
    generate_dataset(cfg, args.n, args.ordering, args.out, jobs=args.jobs, mask_dir=args.masks,
                     extra_header={"run_config": run_config(args)})
    print(f"wrote {args.n} samples to {args.out}")
    return EXIT_OK


# ---------------------------------------------------------------- walls

def cmd_walls(args) -> int:
    from roomcloud.geom import sample_mesh
    from roomcloud.geom.io import read_obj, read_xyz, write_pgm
    from roomcloud.walls import extract_walls, project_histogram, write_sidecar
    if not os.path.exists(args.input):
        raise FileNotFoundError(f"input not found: {args.input}")
    if args.input.lower().endswith(".obj"):
        mesh = read_obj(args.input)
        cloud = sample_mesh(mesh, args.points_sampled, seed=args.seed)
    else:
        cloud = read_xyz(args.input)
    grid = project_histogram(cloud, d=args.bins, bin_size=args.bin_size)
    image = extract_walls(grid, ratio=args.threshold_ratio)
    write_pgm(args.out, image.bits)
    sidecar = args.sidecar or os.path.splitext(args.out)[0] + ".txt"
    write_sidecar(sidecar, grid, image, args.threshold_ratio,
                  run_config=json.dumps(run_config(args), sort_keys=True))
    print(f"wrote {args.out} ({int(image.bits.sum())} wall pixels, threshold {image.threshold})")
    return EXIT_OK


# ---------------------------------------------------------------- train

def _train_config(args, header):
    from roomcloud.ptrnet import PtrNetConfig
    gen = header["gen_config"]
    base = PtrNetConfig.paper_scale() if args.paper_scale else PtrNetConfig()
    changes = {k: v for k, v in dict(
        hidden=args.hidden, attn=args.attn, lr=args.lr, batch=args.batch, max_steps=args.steps,
        grad_clip_norm=args.grad_clip, checkpoint_every=args.checkpoint_every,
        beam_width=args.beam, dtype=args.dtype, lr_decay_steps=args.lr_decay_steps).items() if v is not None}
    return base.replace(b=int(gen["b"]), k_max=int(gen["max_rooms"]), seed=args.seed, **changes)


def cmd_train(args) -> int:
    from roomcloud.ptrnet import train
    from roomcloud.synthgen import load_dataset
    header, records = load_dataset(args.dataset)
    cfg = _train_config(args, header)
    log = args.log or os.path.splitext(args.checkpoint)[0] + ".csv"
    res = train([(r.points, r.labels) for r in records], cfg, checkpoint_path=args.checkpoint,
                log_path=log, resume=args.resume, extra={"run_config": run_config(args)})
    last = res.losses[-1] if res.losses else float("nan")
    print(f"trained to step {res.state.step}, last loss {last:.4f}; checkpoint {args.checkpoint}")
    return EXIT_OK


# ---------------------------------------------------------------- infer

def cmd_infer(args) -> int:
    from roomcloud.geom.io import read_pgm, write_pgm
    from roomcloud.pipeline import predict_rooms, render_overlay, to_pixels, wall_points
    from roomcloud.ptrnet import load_checkpoint
    from roomcloud.synthgen import iter_dataset
    if (args.dataset is None) == (args.walls is None):
        raise UsageError("infer needs exactly one of --dataset or --walls")
    params, cfg, _, _ = load_checkpoint(args.checkpoint)
    beam = args.beam if args.beam is not None else cfg.beam_width
    doc = {"schema_version": 1, "run_config": run_config(args)}
    if args.walls is not None:
        bits = read_pgm(args.walls)
        pts, norm = wall_points(bits, args.p_n, args.ordering, args.seed)
        dec, rooms = predict_rooms(params, pts, cfg.b, cfg.k_max, beam)
        h = bits.shape[0]
        px = [to_pixels(norm.invert(r), h) for r in rooms]
        doc["rooms"] = [{"vertices": r.tolist(), "vertices_pixels": p.tolist()}
                        for r, p in zip(rooms, px)]
        doc["indices"] = list(dec.indices)
        doc["log_prob"] = dec.log_prob
        if args.render:
            write_pgm(args.render, render_overlay(bits, px))
    else:
        if args.render:
            raise UsageError("--render needs --walls")
        it = iter_dataset(args.dataset)
        doc["dataset_header"] = next(it)
        preds = []
        for rec in it:
            dec, rooms = predict_rooms(params, rec.points, cfg.b, cfg.k_max, beam)
            preds.append({"id": rec.id, "indices": list(dec.indices), "log_prob": dec.log_prob,
                          "rooms": [r.tolist() for r in rooms]})
        doc["predictions"] = preds
    text = json.dumps(doc, sort_keys=True) + "\n"
    if args.out in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(args.out, "w") as fh:
            fh.write(text)
    return EXIT_OK


# ---------------------------------------------------------------- eval

def cmd_eval(args) -> int:
    from roomcloud.errors import DatasetFormatError
    from roomcloud.evalbench import report
    from roomcloud.pipeline import evaluate_records
    from roomcloud.synthgen import load_dataset
    datasets, predictions = args.dataset or [], args.predictions or []
    if not datasets or len(datasets) != len(predictions):
        raise UsageError("eval needs matching --dataset/--predictions pairs")
    runs = []
    for dpath, ppath in zip(datasets, predictions):
        header, records = load_dataset(dpath)
        with open(ppath) as fh:
            doc = json.load(fh)
        if "predictions" not in doc:
            raise DatasetFormatError(f"{ppath}: not a dataset prediction file")
        preds = doc["predictions"]
        if len(preds) != len(records):
            raise DatasetFormatError(f"{ppath}: {len(preds)} predictions for {len(records)} samples")
        if [p["id"] for p in preds] != [r.id for r in records]:
            raise DatasetFormatError(f"{ppath}: sample ids do not match {dpath}")
        polys = [[np.asarray(r) for r in p["rooms"]] for p in preds]
        runs.append(evaluate_records(records, polys, ordering=header["ordering"],
                                     input_length=int(header["gen_config"]["p_n"]),
                                     name=os.path.basename(ppath)))
    text = report(runs, args.format)
    if args.out in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(args.out, "w") as fh:
            fh.write(text)
    return EXIT_OK


# ---------------------------------------------------------------- parser

def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="roomcloud", description="Room layouts from point clouds.")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)

    def add(name, func, help_):
        sp = sub.add_parser(name, help=help_)
        sp.add_argument("--config", help="key = value settings file (flags take precedence)")
        sp.add_argument("--seed", type=int, default=None)
        sp.set_defaults(func=func)
        return sp

    g = add("gen-data", cmd_gen_data, "generate a synthetic layout dataset (JSON Lines)")
    g.add_argument("--n", type=int, default=1000)
    g.add_argument("--ordering", choices=("random", "truesort", "pseudosort"), default="pseudosort")
    g.add_argument("--out", default="dataset.jsonl")
    g.add_argument("--p-n", type=int, default=300)
    g.add_argument("--b", type=int, default=10)
    g.add_argument("--max-rooms", type=int, default=5)
    g.add_argument("--edge-min", type=float, default=2.0)
    g.add_argument("--edge-max", type=float, default=8.0)
    g.add_argument("--canvas", type=int, default=128)
    g.add_argument("--shrink", type=float, default=0.1)
    g.add_argument("--jitter", type=float, default=0.5)
    g.add_argument("--dropout", type=float, default=0.1)
    g.add_argument("--shape-weights", default="rectangular=1,rectilinear=1,nonright=1,curved=1")
    g.add_argument("--jobs", type=int, default=1)
    g.add_argument("--masks", default=None, help="directory for per-sample PGM masks")

    w = add("walls", cmd_walls, "extract a wall image from a point cloud or OBJ mesh")
    w.add_argument("--input", required=True)
    w.add_argument("--out", default="walls.pgm")
    w.add_argument("--sidecar", default=None)
    w.add_argument("--bins", type=int, default=128)
    w.add_argument("--bin-size", type=float, default=None, help="fixed bin size in meters")
    w.add_argument("--points-sampled", type=int, default=3_000_000)
    w.add_argument("--threshold-ratio", type=float, default=0.25)

    t = add("train", cmd_train, "train the pointer network")
    t.add_argument("--dataset", required=True)
    t.add_argument("--checkpoint", default="ptrnet.ckpt")
    t.add_argument("--log", default=None, help="metrics CSV (default: next to the checkpoint)")
    t.add_argument("--resume", default=None)
    t.add_argument("--hidden", type=int, default=None)
    t.add_argument("--attn", type=int, default=None)
    t.add_argument("--lr", type=float, default=None)
    t.add_argument("--batch", type=int, default=None)
    t.add_argument("--steps", type=int, default=None)
    t.add_argument("--grad-clip", type=float, default=None)
    t.add_argument("--checkpoint-every", type=int, default=None)
    t.add_argument("--beam", type=int, default=None)
    t.add_argument("--lr-decay-steps", type=int, default=None,
                   help="cosine-decay the learning rate to 0 over this many steps")
    t.add_argument("--dtype", choices=("float64", "float32"), default=None)
    t.add_argument("--paper-scale", action="store_true")

    i = add("infer", cmd_infer, "decode rooms with a trained checkpoint")
    i.add_argument("--checkpoint", required=True)
    i.add_argument("--dataset", default=None)
    i.add_argument("--walls", default=None, help="wall image (PGM)")
    i.add_argument("--out", default=None)
    i.add_argument("--beam", type=int, default=None)
    i.add_argument("--p-n", type=int, default=300)
    i.add_argument("--ordering", choices=("random", "pseudosort"), default="pseudosort")
    i.add_argument("--render", default=None, help="overlay PGM (with --walls)")

    e = add("eval", cmd_eval, "score predictions against a dataset")
    e.add_argument("--dataset", action="append")
    e.add_argument("--predictions", action="append")
    e.add_argument("--format", choices=("text", "json"), default="text")
    e.add_argument("--out", default=None)
    return p


def _config_path(argv):
    for k, tok in enumerate(argv):
        if tok == "--config":
            if k + 1 >= len(argv):
                raise UsageError("--config needs a file name")
            return argv[k + 1]
        if tok.startswith("--config="):
            return tok.split("=", 1)[1]
    return None


def _apply_config(sp, path):
    values = read_config_file(path)
    cmd = values.pop("command", sp.prog.split()[-1])
    if cmd != sp.prog.split()[-1]:
        raise UsageError(f"{path}: settings are for {cmd!r}, not {sp.prog.split()[-1]!r}")
    known = {a.dest: a for a in sp._actions}
    unknown = set(values) - set(known)
    if unknown:
        raise UsageError(f"{path}: unknown settings {sorted(unknown)}")
    defaults = {}
    for dest, raw in values.items():
        a = known[dest]
        if isinstance(a, argparse._StoreTrueAction):
            defaults[dest] = raw.lower() in ("1", "true", "yes", "on")
        elif isinstance(a, argparse._AppendAction):
            defaults[dest] = [s.strip() for s in raw.split(",")]
        else:
            try:
                defaults[dest] = (a.type or str)(raw)
            except ValueError:
                raise UsageError(f"{path}: bad value for {dest}: {raw!r}") from None
            if a.choices is not None and defaults[dest] not in a.choices:
                raise UsageError(f"{path}: {dest} must be one of {sorted(a.choices)}")
        a.required = False
    sp.set_defaults(**defaults)


def parse_args(argv):
    parser = build_parser()
    path = _config_path(argv)
    if path is not None:
        cmd = next((tok for tok in argv if not tok.startswith("-")), None)
        choices = parser._subparsers._group_actions[0].choices
        if cmd in choices:
            if not os.path.exists(path):
                raise UsageError(f"config file not found: {path}")
            _apply_config(choices[cmd], path)
    args = parser.parse_args(argv)
    if args.command is None:
        raise UsageError("roomcloud: a subcommand is required (gen-data, walls, train, infer, eval)")
    if args.seed is None:
        args.seed = _env_seed(0)
    return args


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        args = parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NumericError as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (RoomcloudError, OSError, ValueError, KeyError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
