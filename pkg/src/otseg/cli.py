"""Command-line interface.

Subcommands cover the whole pipeline: decode (features -> segmentation),
train (self-training on a dataset directory), eval (metrics between
label directories), synth (generate a planted dataset), bench (solver
timing CSV), plot (SVG barcodes) and serve (run the HTTP service).

The CLI is a thin client: flags are marshalled into the same request
models the service consumes and executed in process by default, or sent
to a running service with --server for the request/response commands.
Exit codes: 0 success, 1 numerical failure, 2 usage or input errors.
"""
from __future__ import annotations

import csv
import json
import sys
import time
from pathlib import Path
from typing import NoReturn

import click
import numpy as np

from . import __version__, data_io, plotting
from .errors import NumericalError, OtsegError
from .learn import TrainConfig, segment_videos, train as run_train
from .metrics import edit_distance, f1_at_tau
from .segmentation import Segmentation
from .service import handlers
from .service.schemas import (
    EvaluateRequest,
    SegmentRequest,
    SolverOptions,
)
from .solver import SolverConfig


class CliError(click.ClickException):
    exit_code = 2


def _fail(exc: Exception) -> NoReturn:
    if isinstance(exc, NumericalError):
        click.echo(f"error: numerical failure: {exc}", err=True)
        sys.exit(1)
    raise CliError(str(exc))


def _post(server: str, route: str, payload: dict) -> dict:
    import httpx

    resp = httpx.post(f"{server.rstrip('/')}{route}", json=payload, timeout=600.0)
    if resp.status_code != 200:
        body = resp.json() if "json" in resp.headers.get("content-type", "") else {}
        if resp.status_code == 422:
            raise CliError(f"server rejected input: {body.get('detail', resp.text)}")
        click.echo(f"error: server failure: {body.get('detail', resp.text)}", err=True)
        sys.exit(1)
    return resp.json()


def _require(path: Path, kind: str) -> Path:
    if not path.exists():
        raise CliError(f"{kind} not found: {path}")
    return path


def solver_flags(fn):
    fn = click.option("--alpha", type=float, default=None, help="structure weight in [0,1]")(fn)
    fn = click.option("--lam", type=float, default=None, help="marginal KL penalty weight")(fn)
    fn = click.option("--epsilon", type=float, default=None, help="entropy regularization")(fn)
    fn = click.option("--radius", type=float, default=None, help="structure band radius fraction")(fn)
    fn = click.option("--step-size", type=float, default=None, help="mirror-descent step")(fn)
    fn = click.option("--n-iter", type=int, default=None, help="iteration budget")(fn)
    fn = click.option("--stop-tol", type=float, default=None, help="early-stop plan-change tol")(fn)
    return fn


def _options_from_flags(**kw) -> SolverOptions:
    return SolverOptions(**{k: v for k, v in kw.items() if v is not None})


@click.group()
@click.version_option(__version__, prog_name="otseg")
def main():
    """Temporally consistent action segmentation via optimal transport."""


@main.command()
@click.option("--features", required=True, type=click.Path(path_type=Path), help="input .feat file")
@click.option("--actions", "actions_path", type=click.Path(path_type=Path), help="action embeddings .feat")
@click.option("--checkpoint", type=click.Path(path_type=Path), help="trained encoder checkpoint")
@click.option("--out", required=True, type=click.Path(path_type=Path), help="output directory")
@click.option("--dump-plan", is_flag=True, help="also write the full plan as plan.npy")
@click.option("--dump-cost", is_flag=True, help="also write the cost matrix as cost.npy")
@click.option("--server", default=None, help="send the request to a running service URL")
@solver_flags
def decode(features, actions_path, checkpoint, out, dump_plan, dump_cost, server, **flags):
    """Decode a segmentation for one video's features."""
    try:
        x = data_io.read_features(_require(features, "features file"))
        if (actions_path is None) == (checkpoint is None):
            raise CliError("exactly one of --actions or --checkpoint is required")
        if checkpoint is not None:
            from .learn import forward

            state = data_io.load_checkpoint(_require(checkpoint, "checkpoint"))
            feats = forward(state, x)
            acts = state.actions
        else:
            feats = x
            acts = data_io.read_features(_require(actions_path, "actions file"))

        req = SegmentRequest(
            features=feats.tolist(), actions=acts.tolist(), options=_options_from_flags(**flags)
        )
        if server:
            resp = _post(server, "/segment", req.model_dump())
            labels = np.asarray(resp["labels"], dtype=np.int64)
            segments = [(s["action"], s["start"], s["length"]) for s in resp["segments"]]
            plan = np.asarray(resp["plan"], dtype=np.float64)
            report = resp["report"]
        else:
            r = handlers.handle_segment(req)
            labels = np.asarray(r.labels, dtype=np.int64)
            segments = [(s.action, s.start, s.length) for s in r.segments]
            plan = np.asarray(r.plan, dtype=np.float64)
            report = r.report.model_dump()

        out.mkdir(parents=True, exist_ok=True)
        data_io.write_labels(out / "labels.txt", labels)
        seg = Segmentation.from_labels(labels)
        (out / "segments.json").write_text(json.dumps(seg.to_json_obj(), indent=2) + "\n")
        (out / "report.json").write_text(json.dumps(report, indent=2) + "\n")
        if dump_plan:
            np.save(out / "plan.npy", plan)
        if dump_cost:
            from .costs import build_kot_cost

            np.save(out / "cost.npy", build_kot_cost(feats, acts))
        click.echo(f"wrote {out}/labels.txt ({len(segments)} segments)")
    except OtsegError as exc:
        _fail(exc)


@main.command(name="train")
@click.option("--data", required=True, type=click.Path(path_type=Path), help="dataset directory")
@click.option("--out", required=True, type=click.Path(path_type=Path), help="output directory")
@click.option("--config", type=click.Path(path_type=Path), help="JSON file of TrainConfig fields")
@click.option("--epochs", type=int, default=None)
@click.option("--actions", "n_actions", type=int, default=None, help="number of action clusters")
@click.option("--seed", type=int, default=None)
@click.option("--rho", type=float, default=None, help="order prior weight for pseudo-labelling")
def train_cmd(data, out, config, epochs, n_actions, seed, rho):
    """Self-train an encoder on a directory of video_*.feat files."""
    try:
        dataset = data_io.load_dataset_features(_require(data, "dataset directory"))
        fields = {}
        if config is not None:
            fields.update(json.loads(_require(config, "config file").read_text()))
        for key, val in (("epochs", epochs), ("n_actions", n_actions), ("seed", seed), ("rho", rho)):
            if val is not None:
                fields[key] = val
        for solver_key in ("solver_train", "solver_infer"):
            if solver_key in fields:
                fields[solver_key] = SolverConfig(**fields[solver_key])
        cfg = TrainConfig(**fields)

        state, report = run_train(dataset, cfg)
        out.mkdir(parents=True, exist_ok=True)
        data_io.save_checkpoint(out / "checkpoint.ckpt", state)

        log = {"epoch_losses": report.epoch_losses, "step_losses": report.step_losses}
        try:
            gt = data_io.load_dataset_labels(data)
        except OtsegError:
            gt = None
        if gt is not None:
            from .metrics import evaluate

            segs = segment_videos(state, dataset, cfg)
            res = evaluate(segs, gt, mode="full_dataset")
            log["final_metrics"] = res.to_json_obj()
        (out / "train_log.json").write_text(json.dumps(log, indent=2) + "\n")
        click.echo(f"wrote {out}/checkpoint.ckpt ({len(report.epoch_losses)} epochs)")
    except OtsegError as exc:
        _fail(exc)


def _labels_dir(path: Path, kind: str):
    paths = sorted(_require(path, kind).glob("*.txt"))
    if not paths:
        raise CliError(f"no .txt label files under {path}")
    return [data_io.read_labels(p) for p in paths]


def _apply_matching(labels: np.ndarray, matching: dict) -> np.ndarray:
    lut = np.full(int(labels.max()) + 1, -1, dtype=np.int64)
    for cluster, action in matching.items():
        if int(cluster) < lut.size:
            lut[int(cluster)] = int(action)
    return lut[labels]


@main.command(name="eval")
@click.option("--pred", required=True, type=click.Path(path_type=Path), help="predicted labels dir")
@click.option("--gt", required=True, type=click.Path(path_type=Path), help="ground-truth labels dir")
@click.option("--mode", type=click.Choice(["per_video", "full"]), default="full")
@click.option("--segmental", is_flag=True, help="also report edit distance and F1@{10,25,50}")
@click.option("--out", type=click.Path(path_type=Path), help="write metrics JSON here")
@click.option("--server", default=None, help="send the request to a running service URL")
def eval_cmd(pred, gt, mode, segmental, out, server):
    """Evaluate predicted label files against ground truth."""
    try:
        pred_labels = _labels_dir(pred, "prediction directory")
        gt_labels = _labels_dir(gt, "ground-truth directory")
        if len(pred_labels) != len(gt_labels):
            raise CliError(
                f"prediction/ground-truth file counts differ: {len(pred_labels)} vs {len(gt_labels)}"
            )
        eval_mode = "full_dataset" if mode == "full" else "per_video"
        req = EvaluateRequest(
            predictions=[p.tolist() for p in pred_labels],
            ground_truth=[g.tolist() for g in gt_labels],
            mode=eval_mode,
        )
        if server:
            result = _post(server, "/evaluate", req.model_dump())
        else:
            result = handlers.handle_evaluate(req).model_dump()

        rows = [("MoF", result["mof"]), ("F1", result["f1"]), ("mIoU", result["miou"])]
        if segmental:
            # segmental metrics compare label sequences directly, so map
            # predicted clusters onto ground-truth actions first (a
            # no-op when predictions already carry true class ids)
            if eval_mode == "per_video":
                matchings = [r["matching"] for r in result["per_video"]]
            else:
                matchings = [result["matching"]] * len(pred_labels)
            mapped = [
                _apply_matching(p, matching) for p, matching in zip(pred_labels, matchings)
            ]
            eds = [edit_distance(p, g) for p, g in zip(mapped, gt_labels)]
            result["edit_distance"] = float(np.mean(eds))
            rows.append(("ED", result["edit_distance"]))
            for tau in (0.10, 0.25, 0.50):
                vals = [f1_at_tau(p, g, tau) for p, g in zip(mapped, gt_labels)]
                key = f"f1@{int(tau * 100)}"
                result[key] = float(np.mean(vals))
                rows.append((f"F1@{int(tau * 100)}", result[key]))
        for name, value in rows:
            click.echo(f"{name:7s} {value:.4f}")
        if out is not None:
            out.parent.mkdir(parents=True, exist_ok=True)
            out.write_text(json.dumps(result, indent=2, sort_keys=True) + "\n")
    except OtsegError as exc:
        _fail(exc)


@main.command()
@click.option("--out", required=True, type=click.Path(path_type=Path), help="output directory")
@click.option("--videos", type=int, default=20)
@click.option("--actions", "n_actions", type=int, default=6)
@click.option("--dim", type=int, default=16)
@click.option("--frames", type=int, default=480)
@click.option("--segments", "mean_segments", type=float, default=8.0)
@click.option("--sigma", type=float, default=0.1)
@click.option("--concentration", type=float, default=0.5)
@click.option("--order-variation/--no-order-variation", default=True)
@click.option("--repeats/--no-repeats", default=True)
@click.option("--seed", type=int, default=0)
def synth(out, videos, n_actions, dim, frames, mean_segments, sigma, concentration,
          order_variation, repeats, seed):
    """Generate a synthetic dataset with planted segmentations."""
    try:
        spec = data_io.SynthSpec(
            n_videos=videos,
            n_actions=n_actions,
            dim=dim,
            n_frames=frames,
            mean_segments_per_video=mean_segments,
            noise_sigma=sigma,
            class_concentration=concentration,
            order_variation=order_variation,
            repeat_actions=repeats,
            seed=seed,
        )
        ds = data_io.synth_generate(spec)
        data_io.save_dataset(out, ds)
        click.echo(f"wrote {videos} videos under {out}")
    except OtsegError as exc:
        _fail(exc)


@main.command()
@click.option("--sizes", default="1000,2000,4000,8000,16000", help="comma-separated frame counts")
@click.option("--actions", "n_actions", type=int, default=19)
@click.option("--n-iter", type=int, default=25)
@click.option("--repeats", type=int, default=3, help="timing repetitions; best is reported")
@click.option("--out", type=click.Path(path_type=Path), help="write CSV here")
@click.option("--seed", type=int, default=0)
def bench(sizes, n_actions, n_iter, repeats, out, seed):
    """Time the solver across problem sizes; reports ms per iteration."""
    try:
        try:
            size_list = [int(s) for s in sizes.split(",") if s]
        except ValueError:
            raise CliError(f"--sizes must be comma-separated integers, got {sizes!r}")
        if not size_list:
            raise CliError("--sizes is empty")
        from .solver import solve

        cfg = SolverConfig(n_iter=n_iter)
        rows = []
        for n in size_list:
            rng = np.random.default_rng(seed + n)
            cost = 2.0 * rng.random((n, n_actions))
            best = float("inf")
            for _ in range(max(repeats, 1)):
                t0 = time.perf_counter()
                solve(cost, cfg)
                best = min(best, time.perf_counter() - t0)
            rows.append((n, n_actions, best * 1000.0 / n_iter))
            click.echo(f"N={n:7d} K={n_actions}: {rows[-1][2]:8.3f} ms/iteration")
        if out is not None:
            out.parent.mkdir(parents=True, exist_ok=True)
            with open(out, "w", newline="") as fh:
                writer = csv.writer(fh)
                writer.writerow(["n_frames", "n_actions", "ms_per_iteration"])
                writer.writerows(rows)
    except OtsegError as exc:
        _fail(exc)


@main.command()
@click.argument("labels", nargs=-1, required=True, type=click.Path(path_type=Path))
@click.option("--out", required=True, type=click.Path(path_type=Path), help="output directory")
@click.option("--width", type=int, default=960)
@click.option("--height", type=int, default=64)
def plot(labels, out, width, height):
    """Render one SVG barcode per labels file."""
    try:
        out.mkdir(parents=True, exist_ok=True)
        for path in labels:
            lab = data_io.read_labels(_require(path, "labels file"))
            seg = Segmentation.from_labels(lab)
            svg = plotting.barcode_svg(seg, width=width, height=height, title=path.stem)
            target = out / (path.stem + ".svg")
            target.write_text(svg)
            click.echo(f"wrote {target}")
    except OtsegError as exc:
        _fail(exc)


@main.command()
@click.option("--host", default="127.0.0.1")
@click.option("--port", type=int, default=8000)
def serve(host, port):
    """Run the HTTP service."""
    import uvicorn

    uvicorn.run("otseg.service.app:app", host=host, port=port, log_level="warning")


if __name__ == "__main__":
    main()
