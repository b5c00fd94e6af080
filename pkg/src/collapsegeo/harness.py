"""Experiment runner: generate a family, analyze it, emit documents and plots.

The pipeline is strictly deterministic for a fixed (config, seed): byte
identical numeric artifacts across runs.  Every summary value is copied from
the module-level documents written alongside it.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass

import numpy as np
from scipy.sparse import csgraph

from .collapse import CollapseField, semicontinuity_probe, v_field
from .collapsing_graph import (GraphParams, build_graph, graph_morphism,
                               graph_to_document, star_check)
from .generators import FamilyConfig, build_family_limit, build_family_member
from .gh import gh_upper, volume_exhausted_check
from .space import (Space, ValidationError, distance_rows, dump_document,
                    save_space, validate_space)

EXPERIMENT_SCHEMA = "cls-exp-1"


@dataclass
class ExperimentConfig:
    family: FamilyConfig
    eps_grid: list
    graph_eps: float
    lambda_minus: float = 0.25
    lambda_zero: float = 0.5
    lambda_plus: float = 2.0
    gh_mode: str = "upper"
    gh_effort: int = 3
    gh_subsample: int = 160
    pointed_radius: float | None = None
    seed: int = 0
    star_expected: list | None = None     # expected leaves per limit component

    def validate(self):
        self.family.validate()
        if not self.eps_grid:
            raise ValidationError("eps grid must be nonempty")
        if self.gh_mode not in ("upper", "exact"):
            raise ValidationError("gh mode must be 'upper' or 'exact'")
        GraphParams(self.graph_eps, self.lambda_minus, self.lambda_zero,
                    self.lambda_plus).validate()

    def graph_params(self) -> GraphParams:
        return GraphParams(self.graph_eps, self.lambda_minus, self.lambda_zero,
                           self.lambda_plus)

    def to_json(self):
        doc = {"schema": EXPERIMENT_SCHEMA, "family": self.family.to_json(),
               "eps_grid": self.eps_grid,
               "graph_params": {"eps": self.graph_eps,
                                "lambda_minus": self.lambda_minus,
                                "lambda_zero": self.lambda_zero,
                                "lambda_plus": self.lambda_plus},
               "gh": {"mode": self.gh_mode, "effort": self.gh_effort,
                      "subsample": self.gh_subsample},
               "seed": self.seed}
        if self.pointed_radius is not None:
            doc["pointed_radius"] = self.pointed_radius
        if self.star_expected is not None:
            doc["star_expected"] = self.star_expected
        return doc

    @classmethod
    def from_json(cls, doc):
        if doc.get("schema") != EXPERIMENT_SCHEMA:
            raise ValidationError(f"expected schema {EXPERIMENT_SCHEMA!r}")
        fam = doc["family"]
        if isinstance(fam, str):
            fam_cfg = preset(fam).family
        else:
            fam_cfg = FamilyConfig.from_json(fam)
        gp = doc.get("graph_params", {})
        gh = doc.get("gh", {})
        cfg = cls(family=fam_cfg, eps_grid=doc["eps_grid"],
                  graph_eps=gp.get("eps", max(doc["eps_grid"])),
                  lambda_minus=gp.get("lambda_minus", 0.25),
                  lambda_zero=gp.get("lambda_zero", 0.5),
                  lambda_plus=gp.get("lambda_plus", 2.0),
                  gh_mode=gh.get("mode", "upper"),
                  gh_effort=gh.get("effort", 3),
                  gh_subsample=gh.get("subsample", 160),
                  pointed_radius=doc.get("pointed_radius"),
                  seed=doc.get("seed", 0),
                  star_expected=doc.get("star_expected"))
        cfg.validate()
        return cfg


# ---------------------------------------------------------------------------
# presets reproducing the example families


def _tube_radii(piece_budgets):
    """Radii with standalone tube areas 2 pi r (1 + pi) under the budgets."""
    full = 2 * math.pi * (1 + math.pi)
    return [0.98 * b / full for b in piece_budgets]


def build_presets() -> dict:
    presets = {}
    presets["tori-collapse"] = ExperimentConfig(
        family=FamilyConfig("torus", [{"a": 1.0, "b": 0.4}, {"a": 1.0, "b": 0.2},
                                      {"a": 1.0, "b": 0.1}], resolution=2500),
        eps_grid=[0.1], graph_eps=0.1, star_expected=[0])
    presets["cr-cusp"] = ExperimentConfig(
        family=FamilyConfig("revolution",
                            [{"profile": "tube", "radius": 0.5}], resolution=4000),
        eps_grid=[0.25], graph_eps=0.5, star_expected=[2])
    radii = _tube_radii([0.5, 0.25, 0.125])
    neck = min(radii) / 40.0
    presets["chain-m3"] = ExperimentConfig(
        family=FamilyConfig("cusp_chain",
                            [{"radii": radii[:k + 1], "necks": [neck] * k}
                             for k in range(3)], resolution=3500),
        eps_grid=[0.01], graph_eps=0.02, star_expected=[2, 2, 2])
    presets["s2-dumbbell"] = ExperimentConfig(
        family=FamilyConfig("s2_profile",
                            [{"neck": 0.004 * 2.0 ** (-k)} for k in range(5)],
                            resolution=3000),
        eps_grid=[0.05, 0.1, 0.2], graph_eps=0.4, star_expected=[1, 1])
    presets["s2-oscillate"] = ExperimentConfig(
        family=FamilyConfig("s2_profile",
                            [{"neck": 0.15 if k % 2 == 0 else 0.004}
                             for k in range(4)], resolution=2500,
                            limit="one_piece"),
        eps_grid=[0.2], graph_eps=0.4, star_expected=[1])
    return presets


_PRESETS = None


def preset_names():
    global _PRESETS
    if _PRESETS is None:
        _PRESETS = build_presets()
    return sorted(_PRESETS)


def preset(name: str) -> ExperimentConfig:
    global _PRESETS
    if _PRESETS is None:
        _PRESETS = build_presets()
    if name not in _PRESETS:
        raise ValidationError(f"unknown preset {name!r} (have: {', '.join(sorted(_PRESETS))})")
    return _PRESETS[name]


# ---------------------------------------------------------------------------
# pipeline


def _write(doc, outdir, name, manifest):
    path = os.path.join(outdir, name)
    dump_document(doc, path)
    manifest["files"].append(name)
    return path


def _write_text(text, outdir, name, manifest):
    path = os.path.join(outdir, name)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text)
    manifest["files"].append(name)
    return path


def _probe_points(limit: Space, fld: CollapseField, count=20) -> np.ndarray:
    """High-nu probes spread over the limit's connected components."""
    ncomp, labels = csgraph.connected_components(limit.adjacency, directed=False)
    per = max(1, count // max(ncomp, 1))
    probes = []
    for comp in range(ncomp):
        ids = np.flatnonzero(labels == comp)
        top = ids[np.argsort(-fld.nu[ids], kind="stable")][:per]
        probes.extend(int(i) for i in top)
    return np.array(sorted(probes), dtype=np.int64)


def _subsample_ids(space: Space, count) -> np.ndarray:
    if space.n_points <= count:
        return np.arange(space.n_points, dtype=np.int64)
    return np.unique(np.linspace(0, space.n_points - 1, count).astype(np.int64))


def _restricted_space(space: Space, ids) -> Space:
    """Metric restriction: complete graph on the sampled ids with exact
    shortest-path lengths (used for GH summaries on subsamples)."""
    rows = distance_rows(space, ids)[:, ids]
    n = ids.size
    pairs, lens = [], []
    for i in range(n):
        for j in range(i + 1, n):
            if np.isfinite(rows[i, j]):
                pairs.append((i, j))
                lens.append(float(rows[i, j]))
    return Space(space.weights[ids], np.array(pairs, dtype=np.int64).reshape(-1, 2),
                 np.array(lens), mesh_fill_radius=space.mesh_fill_radius)


def run_experiment(config: ExperimentConfig, outdir) -> dict:
    """Deterministic pipeline; returns the artifact manifest (also written).

    Any stage failure is recorded in the manifest with the stage name; the
    partial outputs stay on disk.
    """
    config.validate()
    os.makedirs(outdir, exist_ok=True)
    manifest = {"schema": "cls-manifest-1", "config": config.to_json(),
                "files": [], "stages": [], "complete": False}
    handles = {"dir": outdir, "config": config, "members": [], "fields": [],
               "graphs": [], "limit": None, "limit_field": None,
               "limit_graph": None, "profiles": [], "vex": None, "manifest": manifest}
    stage = "init"
    try:
        stage = "config"
        _write(config.to_json(), outdir, "experiment.json", manifest)
        manifest["stages"].append(stage)

        stage = "generate"
        members, corrs = [], []
        for k in range(len(config.family.schedule)):
            fm = build_family_member(config.family, k)
            report = validate_space(fm.space)
            if not report.ok:
                raise ValidationError(
                    f"member {k} failed validation: {report.violations[:3]}")
            members.append(fm)
            corrs.append(fm.corr_limit)
            save_space(fm.space, os.path.join(outdir, f"space_{k}.json"))
            manifest["files"].append(f"space_{k}.json")
            handles["profiles"].append(fm.profile)
        limit = build_family_limit(config.family)
        if limit is not None and not limit.is_empty:
            save_space(limit, os.path.join(outdir, "space_limit.json"))
            manifest["files"].append("space_limit.json")
        handles["members"] = members
        handles["limit"] = limit
        manifest["stages"].append(stage)

        stage = "fields"
        fields = []
        for k, fm in enumerate(members):
            fld = v_field(fm.space)
            fields.append(fld)
            _write_text(fld.to_csv(), outdir, f"field_{k}.csv", manifest)
        limit_field = None
        if limit is not None and not limit.is_empty:
            limit_field = v_field(limit)
            _write_text(limit_field.to_csv(), outdir, "field_limit.csv", manifest)
        handles["fields"] = fields
        handles["limit_field"] = limit_field
        manifest["stages"].append(stage)

        stage = "graphs"
        gparams = config.graph_params()
        graphs = []
        limit_graph = None
        if limit_field is not None:
            limit_graph = build_graph(limit, limit_field, gparams)
        for k, (fm, fld) in enumerate(zip(members, fields)):
            g = build_graph(fm.space, fld, gparams)
            graphs.append(g)
            doc = graph_to_document(g)
            if config.star_expected is not None and limit_graph is None:
                doc["star_check"] = star_check(g, config.star_expected).to_json()
            _write(doc, outdir, f"graph_{k}.json", manifest)
        if limit_graph is not None:
            doc = graph_to_document(limit_graph)
            if config.star_expected is not None:
                doc["star_check"] = star_check(limit_graph,
                                               config.star_expected).to_json()
            _write(doc, outdir, "graph_limit.json", manifest)
        handles["graphs"] = graphs
        handles["limit_graph"] = limit_graph
        manifest["stages"].append(stage)

        stage = "morphisms"
        if limit_graph is not None:
            for k, (fm, g) in enumerate(zip(members, graphs)):
                rep = graph_morphism(limit_graph, g, fm.corr_limit, limit_field)
                _write(rep.to_json(), outdir, f"morphism_{k}.json", manifest)
        manifest["stages"].append(stage)

        stage = "volume_exhausted"
        vex = None
        if limit is not None:
            vex = volume_exhausted_check(
                [fm.space for fm in members],
                corrs if any(c is not None for c in corrs) else None,
                limit, config.eps_grid, pointed_radius=config.pointed_radius,
                member_fields=fields, limit_field=limit_field)
            _write(vex.to_json(), outdir, "volume_exhausted.json", manifest)
        handles["vex"] = vex
        manifest["stages"].append(stage)

        stage = "semicontinuity"
        if limit_field is not None and all(c is not None for c in corrs):
            probes = _probe_points(limit, limit_field)
            semi = semicontinuity_probe([fm.space for fm in members], corrs,
                                        limit, probes)
            _write(semi.to_json(), outdir, "semicontinuity.json", manifest)
        manifest["stages"].append(stage)

        stage = "gh"
        gh_entries = []
        targets = []
        if limit is not None and not limit.is_empty:
            targets = [(f"member{k}-vs-limit", fm.space, limit)
                       for k, fm in enumerate(members)]
        else:
            targets = [(f"member{k}-vs-member{k - 1}", members[k].space,
                        members[k - 1].space) for k in range(1, len(members))]
        for name, sx, sy in targets:
            rx = _restricted_space(sx, _subsample_ids(sx, config.gh_subsample))
            ry = _restricted_space(sy, _subsample_ids(sy, config.gh_subsample))
            est = gh_upper(rx, ry, effort=config.gh_effort, seed=config.seed)
            gh_entries.append({"pair": name, "mode": est.mode,
                               "lower": est.lower, "upper": est.upper,
                               "subsample": int(rx.n_points)})
        _write({"schema": "cls-gh-1", "mode": "summary", "entries": gh_entries},
               outdir, "gh_summary.json", manifest)
        manifest["stages"].append(stage)

        stage = "summary"
        lines = ["k,n_points,total_mass,sup_v,max_nu,"
                 + ",".join(f"thick_{e}" for e in config.eps_grid)
                 + ",graph_vertices,graph_edges,graph_alpha"]
        for k, (fm, fld, g) in enumerate(zip(members, fields, graphs)):
            thick = [int((fld.nu > e).sum()) for e in config.eps_grid]
            lines.append(",".join(map(str, [
                k, fm.space.n_points, repr(fm.space.total_mass),
                repr(float(fld.v.max())), repr(float(fld.nu.max())),
                *thick, len(g.vertices), len(g.edges), g.alpha_count])))
        _write_text("\n".join(lines) + "\n", outdir, "summary.csv", manifest)
        manifest["stages"].append(stage)

        manifest["complete"] = True
    except Exception as exc:
        manifest["failed_stage"] = stage
        manifest["error"] = f"{type(exc).__name__}: {exc}"
        dump_document(manifest, os.path.join(outdir, "manifest.json"))
        raise
    dump_document(manifest, os.path.join(outdir, "manifest.json"))
    return handles


# ---------------------------------------------------------------------------
# plots


def emit_plots(handles: dict) -> list:
    """Static SVG plots from a run's artifacts; skips anything missing."""
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    plt.rcParams["svg.hashsalt"] = "collapsegeo"

    outdir = handles["dir"]
    plot_dir = os.path.join(outdir, "plots")
    os.makedirs(plot_dir, exist_ok=True)
    written = []
    notes = []

    def save(fig, name):
        path = os.path.join(plot_dir, name)
        fig.savefig(path, format="svg", metadata={"Date": None})
        plt.close(fig)
        written.append(name)

    profiles = [p for p in handles.get("profiles", []) if p is not None]
    if profiles:
        fig, ax = plt.subplots(figsize=(7, 3.2))
        for k, prof in enumerate(profiles):
            ts = np.linspace(0, prof.total_length, 600)
            ax.plot(ts, prof.f(ts), lw=1.1, label=f"k={k}")
        ax.set_xlabel("meridian arclength t")
        ax.set_ylabel("profile f(t)")
        ax.legend(fontsize=7)
        fig.tight_layout()
        save(fig, "profiles.svg")
    else:
        notes.append("no profiles to plot")

    fields = handles.get("fields") or []
    if fields:
        fig, ax = plt.subplots(figsize=(6, 3.2))
        for k, fld in enumerate(fields):
            ax.hist(fld.nu, bins=48, histtype="step", label=f"k={k}")
        ax.set_xlabel("nu")
        ax.set_ylabel("points")
        ax.legend(fontsize=7)
        fig.tight_layout()
        save(fig, "nu_histogram.svg")
    else:
        notes.append("no fields to plot")

    graphs = handles.get("graphs") or []
    target = handles.get("limit_graph") or (graphs[-1] if graphs else None)
    if target is not None and target.vertices:
        fig, ax = plt.subplots(figsize=(5, 4))
        labels = target.component_labels()
        pos = {}
        for comp in range(labels.max() + 1):
            ids = [i for i in range(len(target.vertices)) if labels[i] == comp]
            centers = [i for i in ids if target.vertices[i].cls == "alpha"]
            others = [i for i in ids if i not in centers]
            cx = 2.5 * comp
            for c_i, i in enumerate(centers):
                pos[i] = (cx + 0.6 * c_i, 0.0)
            for l_i, i in enumerate(others):
                ang = 2 * math.pi * (l_i + 0.5) / max(len(others), 1)
                pos[i] = (cx + math.cos(ang), math.sin(ang))
        for a, b in target.edges:
            xs, ys = zip(pos[a], pos[b])
            ax.plot(xs, ys, color="gray", lw=1.0, zorder=1)
        for i, v in enumerate(target.vertices):
            x, y = pos[i]
            filled = v.cls == "alpha"
            ax.scatter([x], [y], s=160, zorder=2,
                       facecolors="black" if filled else "white",
                       edgecolors="black")
            ax.annotate(str(i), (x, y + 0.18), ha="center", fontsize=8)
        ax.set_aspect("equal")
        ax.axis("off")
        save(fig, "collapsing_graph.svg")
    else:
        notes.append("no graph to plot")

    vex = handles.get("vex")
    if vex is not None and vex.entries:
        fig, ax = plt.subplots(figsize=(6, 3.2))
        for eps in vex.eps_grid:
            ds = vex.distortions(eps)
            ax.plot(range(len(ds)), ds, marker="o", label=f"eps={eps}")
        ax.set_xlabel("member k")
        ax.set_ylabel("restricted distortion")
        ax.legend(fontsize=7)
        fig.tight_layout()
        save(fig, "distortion_vs_k.svg")
    else:
        notes.append("no convergence report to plot")

    if notes:
        with open(os.path.join(plot_dir, "notes.txt"), "w", encoding="utf-8") as fh:
            fh.write("\n".join(notes) + "\n")
    return written
