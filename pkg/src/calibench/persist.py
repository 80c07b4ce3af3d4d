"""Plain-text persistence for datasets, models and the bias field.

Everything is line oriented and diffable; floats are written with 17
significant digits so a load reproduces the saved object bit for bit.
Corrupt files fail with a diagnostic that says what went wrong: wrong or
missing header, file cut short, or a field that does not parse as a number.
"""
from __future__ import annotations

from pathlib import Path

import numpy as np

from .phase1 import CoarseDataset, Provenance
from .phase2 import FineDataset, ResidualSample
from .regress.forest import ForestModel, Tree
from .regress.mlp import MlpArch, MlpModel
from .regress.rigid import RigidTransform
from .worldsim import BiasField, YAW_TAGS


class PersistError(Exception):
    """Base class for artifact file problems."""


class VersionError(PersistError):
    """Header line missing or for a different format/version."""


class TruncatedError(PersistError):
    """File ended before the declared content did."""


class FieldFormatError(PersistError):
    """A field that should be numeric is not."""


def _fmt(x: float) -> str:
    return f"{float(x):.17g}"


def _fmt_vec(a) -> str:
    return " ".join(_fmt(v) for v in np.asarray(a, dtype=float).ravel())


def _parse_floats(text: str, path, lineno: int, expect: int | None = None) -> np.ndarray:
    try:
        vals = np.array([float(tok) for tok in text.split()])
    except ValueError as exc:
        raise FieldFormatError(f"{path}:{lineno}: non-numeric field ({exc})") from None
    if expect is not None and len(vals) != expect:
        raise TruncatedError(f"{path}:{lineno}: expected {expect} numbers, got {len(vals)}")
    return vals


class _Reader:
    """Sequential line reader that turns early EOF into TruncatedError."""

    def __init__(self, path):
        self.path = Path(path)
        self.lines = self.path.read_text().splitlines()
        self.pos = 0

    def next(self) -> str:
        if self.pos >= len(self.lines):
            raise TruncatedError(f"{self.path}: file truncated at line {self.pos + 1}")
        line = self.lines[self.pos]
        self.pos += 1
        return line

    @property
    def lineno(self) -> int:
        return self.pos

    def expect_header(self, header: str):
        line = self.next()
        if line != header:
            raise VersionError(f"{self.path}: expected header {header!r}, found {line!r}")

    def done(self) -> bool:
        return self.pos >= len(self.lines)


# ---------------------------------------------------------------------------
# Coarse dataset
# ---------------------------------------------------------------------------

COARSE_COLUMNS = "c_x,c_y,c_z,phi_y,phi_p,phi_r,b_x,b_y,b_z"


def save_coarse(ds: CoarseDataset, path, meta_path=None) -> None:
    path = Path(path)
    rows = [COARSE_COLUMNS]
    for inp, tgt in zip(ds.inputs, ds.targets):
        rows.append(",".join(_fmt(v) for v in np.concatenate([inp, tgt])))
    path.write_text("\n".join(rows) + "\n")
    meta_path = path.with_suffix(path.suffix + ".meta") if meta_path is None else Path(meta_path)
    p = ds.provenance
    meta = [
        "calibench-coarse-meta v1",
        f"n_traj={p.n_traj}",
        f"seed={'' if p.seed is None else p.seed}",
        f"raw_count={p.raw_count}",
        f"cleaned_count={p.cleaned_count}",
    ]
    meta_path.write_text("\n".join(meta) + "\n")


def load_coarse(path, meta_path=None) -> CoarseDataset:
    path = Path(path)
    r = _Reader(path)
    r.expect_header(COARSE_COLUMNS)
    data = []
    while not r.done():
        line = r.next()
        if not line.strip():
            continue
        data.append(_parse_floats(line.replace(",", " "), path, r.lineno, expect=9))
    if not data:
        raise TruncatedError(f"{path}: no data rows")
    arr = np.vstack(data)
    meta_path = path.with_suffix(path.suffix + ".meta") if meta_path is None else Path(meta_path)
    n_traj, seed, raw_count = 0, None, len(arr)
    if meta_path.exists():
        mr = _Reader(meta_path)
        mr.expect_header("calibench-coarse-meta v1")
        kv = {}
        while not mr.done():
            line = mr.next()
            if "=" in line:
                k, v = line.split("=", 1)
                kv[k] = v
        n_traj = int(kv.get("n_traj", 0))
        seed = int(kv["seed"]) if kv.get("seed") else None
        raw_count = int(kv.get("raw_count", len(arr)))
    prov = Provenance(n_traj=n_traj, seed=seed, raw_count=raw_count, cleaned_count=len(arr))
    return CoarseDataset(arr[:, :6], arr[:, 6:], prov)


# ---------------------------------------------------------------------------
# Fine datasets
# ---------------------------------------------------------------------------

FINE_COLUMNS = "yaw,pred_x,pred_y,pred_z,eps_x,eps_y,eps_z"


def save_fine(datasets: dict[float, FineDataset] | FineDataset, path) -> None:
    if isinstance(datasets, FineDataset):
        datasets = {datasets.yaw_tag: datasets}
    rows = [FINE_COLUMNS]
    for yaw in sorted(datasets):
        ds = datasets[yaw]
        for s in ds.samples:
            rows.append(",".join([_fmt(yaw)] + [_fmt(v) for v in s.predicted] +
                                 [_fmt(v) for v in s.correction]))
    Path(path).write_text("\n".join(rows) + "\n")


def load_fine(path) -> dict[float, FineDataset]:
    path = Path(path)
    r = _Reader(path)
    r.expect_header(FINE_COLUMNS)
    grouped: dict[float, list[ResidualSample]] = {}
    while not r.done():
        line = r.next()
        if not line.strip():
            continue
        vals = _parse_floats(line.replace(",", " "), path, r.lineno, expect=7)
        grouped.setdefault(vals[0], []).append(ResidualSample(vals[1:4], vals[4:7]))
    return {yaw: FineDataset(yaw, tuple(samples)) for yaw, samples in grouped.items()}


# ---------------------------------------------------------------------------
# MLP
# ---------------------------------------------------------------------------

MLP_HEADER = "calibench-mlp v1"


def save_mlp(model: MlpModel, path) -> None:
    lines = [MLP_HEADER,
             f"arch {model.arch.hidden_layers} {model.arch.width} {model.arch.activation}",
             f"mean {_fmt_vec(model.input_mean)}",
             f"std {_fmt_vec(model.input_std)}",
             f"layers {len(model.weights)}"]
    for i, (W, b) in enumerate(zip(model.weights, model.biases)):
        lines.append(f"W {i} {W.shape[0]} {W.shape[1]}")
        for row in W:
            lines.append(_fmt_vec(row))
        lines.append(f"b {i} {len(b)}")
        lines.append(_fmt_vec(b))
    lines.append(f"losses {len(model.epoch_losses)}")
    if model.epoch_losses:
        lines.append(_fmt_vec(model.epoch_losses))
    Path(path).write_text("\n".join(lines) + "\n")


def load_mlp(path) -> MlpModel:
    path = Path(path)
    r = _Reader(path)
    r.expect_header(MLP_HEADER)
    arch_line = r.next().split()
    if len(arch_line) != 4 or arch_line[0] != "arch":
        raise FieldFormatError(f"{path}:{r.lineno}: malformed arch line")
    try:
        arch = MlpArch(int(arch_line[1]), int(arch_line[2]), arch_line[3])
    except ValueError as exc:
        raise FieldFormatError(f"{path}:{r.lineno}: {exc}") from None
    mean_line = r.next()
    if not mean_line.startswith("mean "):
        raise FieldFormatError(f"{path}:{r.lineno}: expected mean line")
    mean = _parse_floats(mean_line[5:], path, r.lineno)
    std_line = r.next()
    if not std_line.startswith("std "):
        raise FieldFormatError(f"{path}:{r.lineno}: expected std line")
    std = _parse_floats(std_line[4:], path, r.lineno)
    n_layers_tok = r.next().split()
    if len(n_layers_tok) != 2 or n_layers_tok[0] != "layers":
        raise FieldFormatError(f"{path}:{r.lineno}: expected layers line")
    n_layers = int(n_layers_tok[1])
    weights, biases = [], []
    for i in range(n_layers):
        w_tok = r.next().split()
        if len(w_tok) != 4 or w_tok[0] != "W" or int(w_tok[1]) != i:
            raise FieldFormatError(f"{path}:{r.lineno}: expected weight header for layer {i}")
        n_in, n_out = int(w_tok[2]), int(w_tok[3])
        W = np.vstack([_parse_floats(r.next(), path, r.lineno, expect=n_out)
                       for _ in range(n_in)])
        b_tok = r.next().split()
        if len(b_tok) != 3 or b_tok[0] != "b" or int(b_tok[1]) != i:
            raise FieldFormatError(f"{path}:{r.lineno}: expected bias header for layer {i}")
        b = _parse_floats(r.next(), path, r.lineno, expect=int(b_tok[2]))
        weights.append(W)
        biases.append(b)
    losses_tok = r.next().split()
    if len(losses_tok) != 2 or losses_tok[0] != "losses":
        raise FieldFormatError(f"{path}:{r.lineno}: expected losses line")
    n_losses = int(losses_tok[1])
    losses = list(_parse_floats(r.next(), path, r.lineno, expect=n_losses)) if n_losses else []
    return MlpModel(weights, biases, arch.activation, mean, std, arch, losses)


# ---------------------------------------------------------------------------
# Forest
# ---------------------------------------------------------------------------

FOREST_HEADER = "calibench-forest v1"


def save_forest(model: ForestModel, path) -> None:
    n_targets = model.trees[0].value.shape[1]
    lines = [FOREST_HEADER,
             f"trees {len(model.trees)} features {model.n_features} targets {n_targets}"]
    for ti, tree in enumerate(model.trees):
        lines.append(f"tree {ti} nodes {len(tree.feature)}")
        for i in range(len(tree.feature)):
            if tree.feature[i] >= 0:
                lines.append(f"s {tree.feature[i]} {_fmt(tree.threshold[i])} "
                             f"{tree.left[i]} {tree.right[i]}")
            else:
                lines.append(f"l {_fmt_vec(tree.value[i])}")
    Path(path).write_text("\n".join(lines) + "\n")


def load_forest(path) -> ForestModel:
    path = Path(path)
    r = _Reader(path)
    r.expect_header(FOREST_HEADER)
    meta = r.next().split()
    if len(meta) != 6 or meta[0] != "trees" or meta[2] != "features" or meta[4] != "targets":
        raise FieldFormatError(f"{path}:{r.lineno}: malformed forest metadata")
    n_trees, n_features, n_targets = int(meta[1]), int(meta[3]), int(meta[5])
    trees = []
    for ti in range(n_trees):
        head = r.next().split()
        if len(head) != 4 or head[0] != "tree" or int(head[1]) != ti:
            raise FieldFormatError(f"{path}:{r.lineno}: expected header for tree {ti}")
        n_nodes = int(head[3])
        feature = np.full(n_nodes, -1, dtype=int)
        threshold = np.zeros(n_nodes)
        left = np.full(n_nodes, -1, dtype=int)
        right = np.full(n_nodes, -1, dtype=int)
        value = np.zeros((n_nodes, n_targets))
        for i in range(n_nodes):
            toks = r.next().split()
            if toks[0] == "s":
                if len(toks) != 5:
                    raise FieldFormatError(f"{path}:{r.lineno}: malformed split node")
                feature[i] = int(toks[1])
                threshold[i] = _parse_floats(toks[2], path, r.lineno, expect=1)[0]
                left[i] = int(toks[3])
                right[i] = int(toks[4])
            elif toks[0] == "l":
                value[i] = _parse_floats(" ".join(toks[1:]), path, r.lineno, expect=n_targets)
            else:
                raise FieldFormatError(f"{path}:{r.lineno}: unknown node kind {toks[0]!r}")
        trees.append(Tree(feature, threshold, left, right, value))
    return ForestModel(tuple(trees), n_features)


# ---------------------------------------------------------------------------
# Rigid transforms
# ---------------------------------------------------------------------------

RIGID_HEADER = "calibench-rigid-per-yaw v1"


def save_per_yaw_rigid(transforms: dict[float, RigidTransform], path) -> None:
    lines = [RIGID_HEADER]
    for yaw in sorted(transforms):
        tf = transforms[yaw]
        lines.append(f"yaw {_fmt(yaw)}")
        lines.append("R " + _fmt_vec(tf.rotation))
        lines.append("t " + _fmt_vec(tf.translation))
    Path(path).write_text("\n".join(lines) + "\n")


def load_per_yaw_rigid(path) -> dict[float, RigidTransform]:
    path = Path(path)
    r = _Reader(path)
    r.expect_header(RIGID_HEADER)
    out = {}
    while not r.done():
        line = r.next()
        if not line.strip():
            continue
        toks = line.split()
        if toks[0] != "yaw" or len(toks) != 2:
            raise FieldFormatError(f"{path}:{r.lineno}: expected yaw line, got {line!r}")
        yaw = _parse_floats(toks[1], path, r.lineno, expect=1)[0]
        r_line = r.next()
        if not r_line.startswith("R "):
            raise FieldFormatError(f"{path}:{r.lineno}: expected rotation line")
        R = _parse_floats(r_line[2:], path, r.lineno, expect=9).reshape(3, 3)
        t_line = r.next()
        if not t_line.startswith("t "):
            raise FieldFormatError(f"{path}:{r.lineno}: expected translation line")
        t = _parse_floats(t_line[2:], path, r.lineno, expect=3)
        out[float(yaw)] = RigidTransform(R, t)
    return out


# ---------------------------------------------------------------------------
# Bias field
# ---------------------------------------------------------------------------

BIAS_HEADER = "calibench-bias v1"


def save_bias_field(field: BiasField, path) -> None:
    lines = [BIAS_HEADER,
             f"seed={field.seed}",
             f"target_rms={_fmt(field.target_rms)}",
             f"norm_lo={_fmt_vec(field.norm_lo)}",
             f"norm_span={_fmt_vec(field.norm_span)}",
             f"poly={_fmt_vec(field.poly)}",
             f"sin_amp={_fmt_vec(field.sin_amp)}",
             f"sin_freq={_fmt_vec(field.sin_freq)}",
             f"sin_phase={_fmt_vec(field.sin_phase)}",
             f"rot_gain={_fmt_vec(field.rot_gain)}"]
    Path(path).write_text("\n".join(lines) + "\n")


def load_bias_field(path) -> BiasField:
    path = Path(path)
    r = _Reader(path)
    r.expect_header(BIAS_HEADER)
    kv = {}
    while not r.done():
        line = r.next()
        if not line.strip():
            continue
        if "=" not in line:
            raise FieldFormatError(f"{path}:{r.lineno}: expected key=value, got {line!r}")
        k, v = line.split("=", 1)
        kv[k] = (v, r.lineno)
    required = ("seed", "target_rms", "norm_lo", "norm_span", "poly",
                "sin_amp", "sin_freq", "sin_phase", "rot_gain")
    for k in required:
        if k not in kv:
            raise TruncatedError(f"{path}: missing field {k!r}")

    def grab(key, expect):
        v, lineno = kv[key]
        return _parse_floats(v, path, lineno, expect=expect)

    try:
        seed = int(kv["seed"][0])
    except ValueError:
        raise FieldFormatError(f"{path}:{kv['seed'][1]}: seed must be an integer") from None
    return BiasField(poly=grab("poly", 30).reshape(3, 10),
                     sin_amp=grab("sin_amp", 3), sin_freq=grab("sin_freq", 3),
                     sin_phase=grab("sin_phase", 3),
                     rot_gain=grab("rot_gain", 9).reshape(3, 3),
                     norm_lo=grab("norm_lo", 3), norm_span=grab("norm_span", 3),
                     target_rms=float(grab("target_rms", 1)[0]), seed=seed)


# ---------------------------------------------------------------------------
# Combined predictor manifest
# ---------------------------------------------------------------------------

COMBINED_HEADER = "calibench-combined v1"


def yaw_slug(yaw: float) -> str:
    return f"m{abs(int(yaw))}" if yaw < 0 else f"p{int(yaw)}"


def save_combined_manifest(mlp_path: str, forest_paths: dict[float, str], path) -> None:
    lines = [COMBINED_HEADER, f"mlp={mlp_path}"]
    for yaw in sorted(forest_paths):
        lines.append(f"forest_{yaw_slug(yaw)}={forest_paths[yaw]}")
    Path(path).write_text("\n".join(lines) + "\n")


def load_combined_manifest(path) -> tuple[str, dict[float, str]]:
    path = Path(path)
    r = _Reader(path)
    r.expect_header(COMBINED_HEADER)
    mlp_path = None
    forests = {}
    slug_to_yaw = {yaw_slug(yaw): yaw for yaw in YAW_TAGS}
    while not r.done():
        line = r.next()
        if not line.strip() or "=" not in line:
            continue
        k, v = line.split("=", 1)
        if k == "mlp":
            mlp_path = v
        elif k.startswith("forest_") and k[7:] in slug_to_yaw:
            forests[slug_to_yaw[k[7:]]] = v
        else:
            raise FieldFormatError(f"{path}:{r.lineno}: unknown key {k!r}")
    if mlp_path is None or set(forests) != set(YAW_TAGS):
        raise TruncatedError(f"{path}: manifest missing the mlp or a forest entry")
    return mlp_path, forests
