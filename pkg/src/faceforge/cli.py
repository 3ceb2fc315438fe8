"""Batch command line for the retargeting engine.

Every command is a thin wrapper over the library modules; all accept
``--seed`` where randomness is involved.  On failure a machine-readable
error report is printed to stderr and the exit code is nonzero.
"""

from __future__ import annotations

import functools
import json
import sys

import click
import numpy as np

from . import adapter as adapter_mod
from . import datagen as datagen_mod
from . import model as model_mod
from . import rig as rig_mod
from .animation import estimate_track, export_track, single_image_ramp
from .fitter import FitConfig, load_landmark_sequence


def _reported(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except click.ClickException:
            raise
        except Exception as exc:
            click.echo(json.dumps({"error": type(exc).__name__,
                                   "message": str(exc)}), err=True)
            sys.exit(1)
    return wrapper


@click.group()
def main():
    """Blendshape retargeting workbench."""


@main.command("gen-model")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--vertices", type=int, default=300, show_default=True)
@click.option("--id-dim", type=int, default=80, show_default=True)
@click.option("--out", type=click.Path(), required=True)
@_reported
def gen_model(seed, vertices, id_dim, out):
    """Generate a synthetic morphable face model."""
    model = model_mod.generate_synthetic_model(seed, vertices, id_dim)
    model_mod.save_model(model, out)
    click.echo(f"wrote model ({vertices} vertices, id dim {id_dim}) to {out}")


@main.command("gen-rig")
@click.option("--model", "model_path", type=click.Path(exists=True),
              required=True)
@click.option("--blendshapes", "k", type=int, default=25, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--mix-sparsity", type=float, default=0.25, show_default=True)
@click.option("--out", type=click.Path(), required=True)
@_reported
def gen_rig(model_path, k, seed, mix_sparsity, out):
    """Generate a synthetic character rig on a model's mesh."""
    model = model_mod.load_model(model_path)
    rig = rig_mod.generate_synthetic_rig(model, k, seed, mix_sparsity)
    rig_mod.save_rig(rig, out)
    click.echo(f"wrote rig {rig.name!r} (K={k}) to {out}")


@main.command("gen-dataset")
@click.option("--rig", "rig_path", type=click.Path(exists=True), required=True)
@click.option("--model", "model_path", type=click.Path(exists=True),
              required=True)
@click.option("--count", type=int, default=10000, show_default=True)
@click.option("--split", default="8000,1000,1000", show_default=True,
              help="train,val,test sizes")
@click.option("--rules", "rules_path", type=click.Path(exists=True),
              default=None, help="JSON rule-set file")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", type=click.Path(), required=True)
@_reported
def gen_dataset(rig_path, model_path, count, split, rules_path, seed, out):
    """Generate a (gamma, alpha) training dataset for one rig."""
    rig = rig_mod.load_rig(rig_path)
    model = model_mod.load_model(model_path)
    rules = None
    if rules_path:
        with open(rules_path) as f:
            rules = datagen_mod.RuleSet.from_dict(json.load(f))
    sizes = tuple(int(s) for s in split.split(","))
    dataset = datagen_mod.generate_dataset(
        rig, model, rules=rules, count=count, split=sizes, seed=seed)
    datagen_mod.save_dataset(dataset, out)
    click.echo(f"wrote dataset ({sizes[0]}/{sizes[1]}/{sizes[2]}) to {out}")


def _activation_option(value):
    return {"relu": adapter_mod.RELU,
            "leaky-relu": adapter_mod.LEAKY_RELU}[value]


@main.command("train")
@click.option("--dataset", "dataset_path", type=click.Path(exists=True),
              required=True)
@click.option("--hidden", type=int, default=256, show_default=True)
@click.option("--activation", type=click.Choice(["relu", "leaky-relu"]),
              default="leaky-relu", show_default=True)
@click.option("--clamp/--no-clamp", default=True, show_default=True)
@click.option("--lr", type=float, default=1e-3, show_default=True)
@click.option("--batch-size", type=int, default=64, show_default=True)
@click.option("--epochs", type=int, default=200, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", type=click.Path(), required=True)
@_reported
def train_cmd(dataset_path, hidden, activation, clamp, lr, batch_size, epochs,
              seed, out):
    """Train an adapter network on a generated dataset."""
    dataset = datagen_mod.load_dataset(dataset_path)
    config = adapter_mod.AdapterConfig(
        hidden_dim=hidden, out_dim=dataset.channel_count,
        activation=_activation_option(activation), clamp_output=clamp)
    tconfig = adapter_mod.TrainConfig(learning_rate=lr, batch_size=batch_size,
                                      epochs=epochs, seed=seed)
    net, report = adapter_mod.train(config, tconfig, dataset)
    adapter_mod.save_checkpoint(net, out, seed=seed, report=report)
    click.echo(f"{config.label()}: test MAE {report.test_mae:.4f} "
               f"(best epoch {report.best_epoch}, "
               f"{report.wall_seconds:.1f}s); wrote {out}")


@main.command("eval")
@click.option("--checkpoint", "checkpoint_path", type=click.Path(exists=True),
              required=True)
@click.option("--dataset", "dataset_path", type=click.Path(exists=True),
              required=True)
@click.option("--split", type=click.Choice(["train", "val", "test"]),
              default="test", show_default=True)
@_reported
def eval_cmd(checkpoint_path, dataset_path, split):
    """Report MAE of a checkpoint on a dataset split."""
    net = adapter_mod.load_checkpoint(checkpoint_path)
    dataset = datagen_mod.load_dataset(dataset_path)
    mae = adapter_mod.evaluate_mae(net, getattr(dataset, split))
    click.echo(f"{split} MAE: {mae:.4f}")


@main.command("ablate")
@click.option("--dataset", "dataset_path", type=click.Path(exists=True),
              required=True)
@click.option("--epochs", type=int, default=60, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@_reported
def ablate(dataset_path, epochs, seed):
    """Train the six reference architecture variants; print a table by MAE."""
    dataset = datagen_mod.load_dataset(dataset_path)
    tconfig = adapter_mod.TrainConfig(epochs=epochs, seed=seed)
    rows = adapter_mod.run_ablation_grid(
        dataset, adapter_mod.reference_grid(dataset.channel_count), tconfig)
    rows.sort(key=lambda r: r[1])
    width = max(len(c.label()) for c, _ in rows)
    for config, mae in rows:
        click.echo(f"{config.label():<{width}}  MAE {mae:.4f}")


@main.command("animate")
@click.option("--model", "model_path", type=click.Path(exists=True),
              required=True)
@click.option("--rig", "rig_path", type=click.Path(exists=True), required=True)
@click.option("--checkpoint", "checkpoint_path", type=click.Path(exists=True),
              required=True)
@click.option("--landmarks", "landmarks_path", type=click.Path(exists=True),
              required=True)
@click.option("--keyframe-interval", type=int, default=5, show_default=True)
@click.option("--ramp-frames", type=int, default=0,
              help="expand a single-image input into a zero-peak-zero ramp")
@click.option("--report-timing", is_flag=True)
@click.option("--out", type=click.Path(), required=True)
@_reported
def animate(model_path, rig_path, checkpoint_path, landmarks_path,
            keyframe_interval, ramp_frames, report_timing, out):
    """Estimate a full animation track from a landmark sequence and export it."""
    model = model_mod.load_model(model_path)
    rig = rig_mod.load_rig(rig_path)
    net = adapter_mod.load_checkpoint(checkpoint_path)
    frames, fps = load_landmark_sequence(landmarks_path)
    seconds: list = []
    track = estimate_track(frames, model, np.zeros(model.id_dim), net,
                           FitConfig(reg_lambda=1e-6),
                           keyframe_interval=keyframe_interval,
                           fps=fps or 25.0, frame_seconds=seconds)
    if len(track) == 1 and ramp_frames >= 3:
        peak = track.frames[0]
        track = single_image_ramp(peak.alpha_auto, ramp_frames,
                                  gamma=peak.gamma, pose=peak.pose,
                                  fps=track.fps)
    export_track(track, rig, destination=out)
    click.echo(f"wrote {len(track)}-frame animation to {out}")
    if report_timing:
        times = np.array(seconds)
        click.echo(f"per-frame generation time: {times.mean() * 1e3:.2f} "
                   f"± {times.std() * 1e3:.2f} ms over {len(times)} frames")


@main.command("export")
@click.option("--store", "store_path", type=click.Path(exists=True),
              required=True)
@click.option("--project", "project_id", required=True)
@click.option("--out", type=click.Path(), required=True)
@_reported
def export_cmd(store_path, project_id, out):
    """Export a stored project's track to an animation file."""
    from .service.store import ProjectStore
    store = ProjectStore(store_path)
    if not store.exists(project_id):
        raise click.ClickException(f"no such project: {project_id}")
    if not store.has_track(project_id):
        raise click.ClickException("project is not initialized")
    track = store.load_track(project_id)
    rig = store.load_rig(project_id)
    ledger = store.load_ledger(project_id)
    export_track(track, rig, destination=out,
                 ledger_records=[r.to_dict() for r in ledger.records])
    click.echo(f"wrote {out}")


@main.command("serve")
@click.option("--store", "store_path", type=click.Path(), default=None,
              help="project store directory (default: $FACEFORGE_STORE)")
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=8000, show_default=True)
@_reported
def serve(store_path, host, port):
    """Run the HTTP service."""
    import uvicorn
    from .service import create_app
    uvicorn.run(create_app(store_path), host=host, port=port)


if __name__ == "__main__":
    main()
