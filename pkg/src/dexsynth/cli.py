"""Command-line pipeline: preprocess objects, synthesize grasp datasets,
evaluate and export them.

Exit codes: 0 success, 1 usage/config error, 2 partial data failure,
3 verification failure. Every data-producing run writes a ``run.json`` echo
of the fully resolved configuration next to its outputs.
"""

import argparse
import dataclasses
import json
import sys
from pathlib import Path

from . import gradcheck
from .dataset import dataset_stats, export_posed_hand, format_stats_table, read_records, write_records
from .energy import Weights
from .errors import ConfigError, DexsynthError
from .geometry import convex_hull3, load_mesh, normalize_to_unit_sphere, save_obj
from .hand import forward_kinematics, load_hand, GraspPose
from .objects import contact_sample_rng, prepare_object
from .optim import OptimConfig, run_batch
from .quality import Q1Config, find_contacts, penetration_depth_cm, q1

DEFAULT_SCALES = (0.06, 0.08, 0.10, 0.12, 0.15)

REFERENCE_NOTE = ("published reference (large-scale ShadowHand corpus): "
                  "100% Q1 mean 0.1145, best 10% Q1 mean 0.2533, H mean 5.962 "
                  "(context only, not a pass/fail gate)")


@dataclasses.dataclass
class RunConfig:
    hand_description: str
    hand_annotations: str
    objects: str
    scales: list = dataclasses.field(default_factory=lambda: list(DEFAULT_SCALES))
    object_ids: list = None
    batch_size: int = 64
    seed: int = 0
    workers: int = 1
    out: str = "dataset.jsonl"
    optim: OptimConfig = dataclasses.field(default_factory=OptimConfig)
    weights: Weights = dataclasses.field(default_factory=Weights)
    q1: Q1Config = dataclasses.field(default_factory=Q1Config)

    @classmethod
    def from_file(cls, path):
        try:
            raw = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        return cls.from_dict(raw)

    @classmethod
    def from_dict(cls, raw):
        raw = dict(raw)
        for key, typ in (("optim", OptimConfig), ("weights", Weights), ("q1", Q1Config)):
            if key in raw and isinstance(raw[key], dict):
                unknown = set(raw[key]) - set(typ.__dataclass_fields__)
                if unknown:
                    raise ConfigError(f"unknown {key} config keys: {sorted(unknown)}")
                raw[key] = typ(**raw[key])
        unknown = set(raw) - set(cls.__dataclass_fields__)
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        missing = {"hand_description", "hand_annotations", "objects"} - set(raw)
        if missing:
            raise ConfigError(f"config missing required keys: {sorted(missing)}")
        return cls(**raw)

    def validate(self):
        for path in (self.hand_description, self.hand_annotations, self.objects):
            if not Path(path).exists():
                raise ConfigError(f"path does not exist: {path}")
        if any(s <= 0 for s in self.scales):
            raise ConfigError("scales must all be > 0")
        if self.batch_size < 1:
            raise ConfigError("batch_size must be >= 1")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        self.optim.validate()

    def to_dict(self):
        out = dataclasses.asdict(self)
        return out


def _write_run_echo(out_path, payload):
    path = Path(out_path)
    base = path if path.is_dir() else path.parent
    base.mkdir(parents=True, exist_ok=True)
    (base / "run.json").write_text(json.dumps(payload, indent=1, default=str) + "\n")


def _scale_name(scale):
    return f"scale_{scale:.3f}.obj"


# -- preprocess ---------------------------------------------------------------


def cmd_preprocess(args):
    in_dir = Path(args.input_dir)
    out_dir = Path(args.output_dir)
    if not in_dir.is_dir():
        print(f"error: not a directory: {in_dir}", file=sys.stderr)
        return 1
    scales = args.scales or list(DEFAULT_SCALES)
    files = sorted(p for p in in_dir.iterdir()
                   if p.suffix.lower() in (".obj", ".off", ".stl"))
    if not files:
        print(f"error: no mesh files in {in_dir}", file=sys.stderr)
        return 1
    out_dir.mkdir(parents=True, exist_ok=True)
    manifest = {"version": 1, "scales": scales, "objects": []}
    failures = 0
    for path in files:
        try:
            mesh = load_mesh(path)
            normalized, factor = normalize_to_unit_sphere(mesh)
            hull = convex_hull3(normalized.vertices)
            obj_dir = out_dir / path.stem
            obj_dir.mkdir(exist_ok=True)
            save_obj(obj_dir / "normalized.obj", normalized)
            save_obj(obj_dir / "hull.obj", hull)
            for s in scales:
                save_obj(obj_dir / _scale_name(s), normalized.scaled(s))
            manifest["objects"].append({
                "id": path.stem,
                "source": str(path),
                "watertight": normalized.watertight,
                "normalize_factor": factor,
            })
            print(f"processed {path.stem} ({normalized.num_faces} faces, "
                  f"watertight={normalized.watertight})")
        except DexsynthError as exc:
            failures += 1
            print(f"failed {path.name}: {exc}", file=sys.stderr)
    (out_dir / "manifest.json").write_text(json.dumps(manifest, indent=1) + "\n")
    _write_run_echo(out_dir, {"command": "preprocess", "input": str(in_dir),
                              "output": str(out_dir), "scales": scales})
    print(f"{len(manifest['objects'])} object(s) written to {out_dir}")
    return 2 if failures else 0


# -- object resolution for synth/eval ----------------------------------------


def _iter_objects(objects_path, scales, object_ids=None):
    """Yield (object_id, scale, mesh). Accepts a preprocess output directory
    (with manifest.json) or a single mesh file (normalized on the fly)."""
    objects_path = Path(objects_path)
    if objects_path.is_dir():
        manifest_path = objects_path / "manifest.json"
        if not manifest_path.is_file():
            raise ConfigError(f"no manifest.json in {objects_path}; run preprocess first")
        manifest = json.loads(manifest_path.read_text())
        for entry in manifest["objects"]:
            obj_id = entry["id"]
            if object_ids and obj_id not in object_ids:
                continue
            for s in scales:
                scaled = objects_path / obj_id / _scale_name(s)
                if scaled.is_file():
                    mesh = load_mesh(scaled)
                else:
                    mesh = load_mesh(objects_path / obj_id / "normalized.obj").scaled(s)
                yield obj_id, s, mesh
    else:
        normalized, _ = normalize_to_unit_sphere(load_mesh(objects_path))
        for s in scales:
            yield objects_path.stem, s, normalized.scaled(s)


# -- synth --------------------------------------------------------------------


def cmd_synth(args):
    cfg = RunConfig.from_file(args.config)
    if args.seed is not None:
        cfg.seed = args.seed
    if args.workers is not None:
        cfg.workers = args.workers
    if args.out is not None:
        cfg.out = args.out
    if args.batch_size is not None:
        cfg.batch_size = args.batch_size
    if args.iterations is not None:
        cfg.optim.iterations = args.iterations
    cfg.validate()

    hand = load_hand(cfg.hand_description, cfg.hand_annotations)
    plan = list(_iter_objects(cfg.objects, cfg.scales, cfg.object_ids))
    if args.dry_run:
        print(f"dry run: {len(plan)} (object, scale) pair(s), batch {cfg.batch_size}, "
              f"{cfg.optim.iterations} iteration(s), seed {cfg.seed}")
        for obj_id, s, mesh in plan:
            print(f"  {obj_id} @ {s:g} ({mesh.num_faces} faces)")
        return 0

    out_path = Path(cfg.out)
    _write_run_echo(out_path, {"command": "synth", **cfg.to_dict()})
    all_records = []
    for obj_id, s, mesh in plan:
        obj = prepare_object(mesh, obj_id, s, cfg.seed,
                             n_samples=cfg.optim.penetration_samples,
                             hull_offset=cfg.optim.hull_offset)
        records = run_batch(hand, obj, cfg.batch_size, cfg.optim, cfg.seed,
                            weights=cfg.weights, q1_config=cfg.q1,
                            workers=cfg.workers)
        valid = sum(r.flags["valid"] for r in records)
        print(f"{obj_id} @ {s:g}: {valid}/{len(records)} valid "
              f"({100.0 * valid / len(records):.1f}%)")
        all_records.extend(records)
    all_records.sort(key=lambda r: (r.object_id, r.scale, r.seed))
    count = write_records(all_records, out_path)
    print(f"wrote {count} record(s) to {out_path}")
    return 0


# -- eval ---------------------------------------------------------------------


def _regroup(records):
    groups = {}
    for rec in records:
        groups.setdefault((rec.object_id, rec.scale), []).append(rec)
    return groups


def cmd_eval(args):
    records = read_records(args.dataset, strict=args.strict)
    if not records:
        print("error: no records in dataset", file=sys.stderr)
        return 1
    hand = load_hand(args.hand, args.annotations)
    dof = hand.dof
    for rec in records:
        if len(rec.joint_angles) != dof:
            print(f"error: record joint dimension {len(rec.joint_angles)} "
                  f"!= hand dof {dof}", file=sys.stderr)
            return 1

    meta = records[0].meta
    q1_cfg = Q1Config(**meta["q1_config"])
    master_seed = int(meta.get("master_seed", 0))
    scales = sorted({rec.scale for rec in records})
    mesh_index = {}
    for obj_id, s, mesh in _iter_objects(args.objects, scales):
        mesh_index[(obj_id, s)] = mesh

    worst_q1_diff = 0.0
    worst_pen_diff = 0.0
    recomputed = []
    for (obj_id, s), group in _regroup(records).items():
        if (obj_id, s) not in mesh_index:
            print(f"error: no mesh for {obj_id} @ {s:g} under {args.objects}",
                  file=sys.stderr)
            return 1
        obj = prepare_object(mesh_index[(obj_id, s)], obj_id, s, master_seed,
                             n_samples=int(meta.get("penetration_samples", 2048)),
                             hull_offset=float(meta.get("hull_offset", 0.2)))
        for rec in group:
            pose = GraspPose(rec.translation, rec.rotation_quat_wxyz, rec.joint_angles)
            posed = forward_kinematics(hand, pose)
            rng = contact_sample_rng(rec.seed, obj_id, s)
            contacts = find_contacts(hand, posed, obj.mesh, q1_cfg.contact_threshold,
                                     q1_cfg.samples_per_link, rng)
            pen = penetration_depth_cm(hand, posed, obj.samples.points)
            q1_val = q1(contacts, q1_cfg, pen)
            worst_q1_diff = max(worst_q1_diff, abs(q1_val - rec.q1))
            worst_pen_diff = max(worst_pen_diff, abs(pen - rec.penetration_cm))
            recomputed.append(q1_val)

    stats = dataset_stats(records, hand)
    print(format_stats_table(stats))
    print(f"\nrecomputed Q1 max |diff| vs stored: {worst_q1_diff:.3e}")
    print(f"recomputed penetration max |diff| vs stored: {worst_pen_diff:.3e} cm")
    if args.out:
        report = {**stats, "recomputed_q1_max_diff": worst_q1_diff,
                  "recomputed_pen_max_diff_cm": worst_pen_diff}
        Path(args.out).write_text(json.dumps(report, indent=1) + "\n")
        _write_run_echo(args.out, {"command": "eval", "dataset": str(args.dataset),
                                   "objects": str(args.objects)})
    return 0


# -- stats / export / check-gradients ----------------------------------------


def cmd_stats(args):
    records = read_records(args.dataset, strict=args.strict)
    if not records:
        print("error: no records in dataset", file=sys.stderr)
        return 1
    hand = load_hand(args.hand, args.annotations)
    stats = dataset_stats(records, hand)
    print(format_stats_table(stats))
    if args.out:
        Path(args.out).write_text(json.dumps(stats, indent=1) + "\n")
    return 0


def cmd_export(args):
    records = read_records(args.dataset, strict=args.strict)
    if not records:
        print("error: no records in dataset", file=sys.stderr)
        return 1
    hand = load_hand(args.hand, args.annotations)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    if args.index is not None:
        if not 0 <= args.index < len(records):
            print(f"error: index {args.index} out of range", file=sys.stderr)
            return 1
        chosen = [(args.index, records[args.index])]
    else:
        chosen = list(enumerate(records[:args.limit]))
    for idx, rec in chosen:
        pose = GraspPose(rec.translation, rec.rotation_quat_wxyz, rec.joint_angles)
        name = f"grasp_{idx:05d}_{rec.object_id}.obj"
        export_posed_hand(hand, pose, out_dir / name)
        print(f"wrote {out_dir / name}")
    return 0


def cmd_check_gradients(args):
    hand = load_hand(args.hand, args.annotations)
    mesh = load_mesh(args.object)
    obj = prepare_object(mesh, Path(args.object).stem, 1.0, args.seed)
    report = gradcheck.run(hand, obj, seed=args.seed, n_states=args.states)
    ok = True
    for term, row in report.items():
        status = "ok" if row["worst_rel_err"] <= args.tolerance else "FAIL"
        ok &= status == "ok"
        print(f"{term:8s} worst rel err {row['worst_rel_err']:.3e} "
              f"({row['active']}/{row['states']} active)  {status}")
    return 0 if ok else 3


# -- parser -------------------------------------------------------------------


def build_parser():
    parser = argparse.ArgumentParser(
        prog="dexsynth",
        description="Optimization-based dexterous grasp synthesis and evaluation")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("preprocess", help="normalize meshes, cache hulls and scales")
    p.add_argument("input_dir")
    p.add_argument("output_dir")
    p.add_argument("--scales", type=float, nargs="+", default=None)
    p.set_defaults(func=cmd_preprocess)

    p = sub.add_parser("synth", help="synthesize a grasp dataset")
    p.add_argument("--config", required=True)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--workers", type=int, default=None)
    p.add_argument("--out", default=None)
    p.add_argument("--batch-size", type=int, default=None)
    p.add_argument("--iterations", type=int, default=None)
    p.add_argument("--dry-run", action="store_true")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("eval", help="recompute metrics from a dataset")
    p.add_argument("dataset")
    p.add_argument("--objects", required=True)
    p.add_argument("--hand", required=True)
    p.add_argument("--annotations", required=True)
    p.add_argument("--out", default=None)
    p.add_argument("--strict", action="store_true")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("stats", help="print dataset summary statistics")
    p.add_argument("dataset")
    p.add_argument("--hand", required=True)
    p.add_argument("--annotations", required=True)
    p.add_argument("--out", default=None)
    p.add_argument("--strict", action="store_true")
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("export", help="export posed hand meshes for inspection")
    p.add_argument("dataset")
    p.add_argument("--hand", required=True)
    p.add_argument("--annotations", required=True)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--index", type=int, default=None)
    p.add_argument("--limit", type=int, default=8)
    p.add_argument("--strict", action="store_true")
    p.set_defaults(func=cmd_export)

    p = sub.add_parser("check-gradients", help="finite-difference gradient audit")
    p.add_argument("--hand", required=True)
    p.add_argument("--annotations", required=True)
    p.add_argument("--object", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--states", type=int, default=20)
    p.add_argument("--tolerance", type=float, default=1e-3)
    p.set_defaults(func=cmd_check_gradients)

    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except DexsynthError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
