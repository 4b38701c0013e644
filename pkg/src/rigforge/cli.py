"""Command-line surface: templates, builds, posing, validation, benchmarks,
exports, and the interactive posing service.

All commands read and write versioned JSON with canonical formatting, so a
given input always produces byte-identical output.  Exit codes: 0 success,
2 validation or schema failure, 1 unexpected error.
"""

from __future__ import annotations

import sys

import click

from .compiler import RigBuildOptions, assemble_character
from .errors import RigError
from .graph import ControlPose
from .jsonio import (
    anim_to_json,
    canonical_dumps,
    dump_json,
    load_json,
    load_rig,
    pose_from_json,
    posed_to_json,
    rig_fingerprint,
    rig_to_json,
    save_rig,
)
from .validation import ValidationConfig, benchmark_rig, validate_rig
from .widgets import WidgetTemplate, create_template


@click.group()
def main() -> None:
    """Procedural character rigging: templates in, posed joints out."""


# -- templates ----------------------------------------------------------------


@main.group()
def template() -> None:
    """Create and check widget templates."""


@template.command("new")
@click.option("--kind", type=click.Choice(["biped", "quadruped", "part"]), required=True)
@click.option("--part", "part_tag", default=None, help="part tag when --kind part")
@click.option("-o", "--out", type=click.Path(dir_okay=False), required=True)
def template_new(kind: str, part_tag: str, out: str) -> None:
    """Write a canonical widget template."""
    try:
        tpl = create_template(kind, part_tag)
    except RigError as exc:
        raise click.UsageError(str(exc)) from exc
    dump_json(out, tpl.to_json())
    click.echo(f"wrote {kind} template with {len(tpl.units)} widgets to {out}")


@template.command("validate")
@click.argument("path", type=click.Path(exists=True, dir_okay=False))
@click.option("--format", "fmt", type=click.Choice(["text", "json"]), default="text")
def template_validate(path: str, fmt: str) -> None:
    """Check a template for zero-length bones and broken symmetry."""
    tpl = _load_template(path)
    findings = tpl.validate()
    if fmt == "json":
        click.echo(
            canonical_dumps(
                {
                    "pass": not findings,
                    "findings": [
                        {
                            "rule": f.rule,
                            "widgets": list(f.widgets),
                            "measured": f.measured,
                            "message": f.message,
                        }
                        for f in findings
                    ],
                }
            ),
            nl=False,
        )
    else:
        click.echo("clean" if not findings else f"{len(findings)} finding(s):")
        for f in findings:
            click.echo(f"  {f.rule}: {f.message} (measured {f.measured:.6g})")
    if findings:
        sys.exit(2)


def _load_template(path: str) -> WidgetTemplate:
    try:
        return WidgetTemplate.from_json(load_json(path))
    except RigError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(2)


# -- build --------------------------------------------------------------------


@main.command()
@click.argument("template_path", type=click.Path(exists=True, dir_okay=False))
@click.option("-o", "--out", type=click.Path(dir_okay=False), required=True)
@click.option("--no-stretch", is_flag=True, help="disable spine and limb stretch")
@click.option("--no-stretch-spine", is_flag=True)
@click.option("--no-stretch-limbs", is_flag=True)
@click.option("--no-lock", is_flag=True, help="disable elbow/knee locking")
@click.option("--no-finger-attrs", is_flag=True, help="per-joint finger controls only")
@click.option("--twist", type=int, default=3, show_default=True, help="forearm twist joints")
@click.option("--mode", type=click.Choice(["fk", "ik"]), default="ik", show_default=True)
def build(template_path, out, no_stretch, no_stretch_spine, no_stretch_limbs,
          no_lock, no_finger_attrs, twist, mode) -> None:
    """Compile a widget template into a rig file with an embedded report."""
    tpl = _load_template(template_path)
    findings = tpl.validate()
    if findings:
        click.echo(f"template invalid ({len(findings)} findings):", err=True)
        for f in findings:
            click.echo(f"  {f.rule}: {f.message}", err=True)
        sys.exit(2)
    options = RigBuildOptions(
        stretch_spine=not (no_stretch or no_stretch_spine),
        stretch_limbs=not (no_stretch or no_stretch_limbs),
        limb_lock=not no_lock,
        twist_joints=twist,
        finger_attrs=not no_finger_attrs,
        default_mode=mode,
    )
    try:
        rig = assemble_character(tpl, options)
    except RigError as exc:
        click.echo(f"build failed: {exc}", err=True)
        sys.exit(2)
    # structural rules only here: timing depends on the host, and build
    # output must be byte-reproducible
    report = validate_rig(rig, ValidationConfig(check_performance=False))
    doc = save_rig(out, rig, validation=report.to_json())
    click.echo(
        f"built {rig.kind} rig: {len(rig.skeleton.rest_world)} joints, "
        f"{len(rig.graph.nodes)} nodes, fingerprint {doc['fingerprint']}"
    )
    if not report.passed:
        click.echo(report.to_text(), err=True)
        sys.exit(2)


# -- pose ---------------------------------------------------------------------


@main.command()
@click.argument("rig_path", type=click.Path(exists=True, dir_okay=False))
@click.argument("pose_path", type=click.Path(exists=True, dir_okay=False))
@click.option("-o", "--out", type=click.Path(dir_okay=False), required=True)
def pose(rig_path, pose_path, out) -> None:
    """Evaluate a pose file into baked world matrices."""
    try:
        rig = load_rig(rig_path)
        doc = load_json(pose_path)
        control_pose = pose_from_json(doc)
        fingerprint = rig_fingerprint(rig_to_json(rig))
        if doc.get("rig") and doc["rig"] != fingerprint:
            click.echo(
                f"error: pose was authored for rig {doc['rig']}, this is {fingerprint}",
                err=True,
            )
            sys.exit(2)
        worlds = rig.evaluate(control_pose)
    except RigError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(2)
    dump_json(out, posed_to_json(worlds, fingerprint))
    click.echo(f"posed {len(worlds)} joints to {out}")


# -- validate / bench -----------------------------------------------------------


@main.command()
@click.argument("rig_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--format", "fmt", type=click.Choice(["text", "json"]), default="text")
@click.option("--skip-performance", is_flag=True, help="structural rules only")
def validate(rig_path, fmt, skip_performance) -> None:
    """Run the rule catalogue; exit 0 only on a clean rig."""
    try:
        rig = load_rig(rig_path)
    except RigError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(2)
    report = validate_rig(
        rig, ValidationConfig(check_performance=not skip_performance)
    )
    if fmt == "json":
        click.echo(canonical_dumps(report.to_json()), nl=False)
    else:
        click.echo(report.to_text())
    sys.exit(0 if report.passed else 2)


@main.command()
@click.argument("rig_path", type=click.Path(exists=True, dir_okay=False))
@click.option("-n", "--evals", type=int, default=1000, show_default=True)
@click.option("--seed", type=int, default=None, help="overrides RIGFORGE_SEED")
@click.option("--format", "fmt", type=click.Choice(["text", "json"]), default="text")
def bench(rig_path, evals, seed, fmt) -> None:
    """Benchmark full and incremental evaluation over a seeded pose run."""
    try:
        rig = load_rig(rig_path)
    except RigError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(2)
    stats = benchmark_rig(rig, evals, seed=seed)
    if fmt == "json":
        click.echo(canonical_dumps(stats), nl=False)
    else:
        for key in sorted(stats):
            click.echo(f"{key} = {stats[key]:.6g}")


# -- export ---------------------------------------------------------------------


@main.command()
@click.argument("rig_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--what", type=click.Choice(["skeleton", "animation"]), default="skeleton",
              show_default=True)
@click.option("--poses", "poses_path", type=click.Path(exists=True, dir_okay=False),
              default=None, help="pose-sequence JSON for --what animation")
@click.option("-o", "--out", type=click.Path(dir_okay=False), required=True)
def export(rig_path, what, poses_path, out) -> None:
    """Export the skeleton rest data, or bake a pose sequence to matrices."""
    try:
        rig = load_rig(rig_path)
        if what == "skeleton":
            dump_json(out, rig.skeleton.to_json())
            click.echo(f"exported {len(rig.skeleton.rest_world)} joints to {out}")
            return
        if poses_path is None:
            raise click.UsageError("--what animation needs --poses")
        seq = load_json(poses_path)
        if not isinstance(seq, list):
            seq = [seq]
        session = rig.session()
        frames = []
        for i, doc in enumerate(seq):
            t = float(doc.get("time", i))
            frames.append((t, session.evaluate(pose_from_json(doc))))
        dump_json(out, anim_to_json(frames))
        click.echo(f"baked {len(frames)} frames to {out}")
    except RigError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(2)


# -- serve ------------------------------------------------------------------------


@main.command()
@click.argument("rig_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=8765, show_default=True)
@click.option("--ui", "ui_dir", type=click.Path(exists=True, file_okay=False),
              default=None, help="static directory to serve at /")
def serve(rig_path, host, port, ui_dir) -> None:
    """Run the interactive posing service (JSON over WebSocket)."""
    import uvicorn

    from .service import create_app

    try:
        rig = load_rig(rig_path)
    except RigError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(2)
    app = create_app(rig, ui_dir=ui_dir)
    click.echo(f"serving rig on ws://{host}:{port}/ws")
    uvicorn.run(app, host=host, port=port, log_level="warning")


if __name__ == "__main__":
    main()
