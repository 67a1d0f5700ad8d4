"""Experiment runner: declarative JSON configs in, deterministic CSV/JSON
records out.

Exit codes: 0 success, 1 config error, 2 solver failure (suite runs return 0
and isolate failures per row).  Output files are written atomically.
"""

import json
import os
import sys
import tempfile
import time
from concurrent.futures import ThreadPoolExecutor

import click
import numpy as np

from . import problems
from .inverse import (infer_advection_beta, infer_burgers_nu,
                      infer_lotka_volterra)
from .tuning import TuneConfig, default_grid, tune_linear


class ConfigError(ValueError):
    pass


# ---------------------------------------------------------------------------
# config handling

_FACTORIES = {
    "advection": problems.advection_setup,
    "lotka_volterra": problems.lotka_volterra_setup,
    "maxwell": problems.maxwell_setup,
    "burgers": problems.burgers_setup,
}

_SOLVER_PROBLEM = {
    "linear": "advection",
    "fdm": "advection",
    "coupled": "maxwell",
    "coupled_picard": "lotka_volterra",
    "scheme": "burgers",
    "fully_nonlinear": "burgers",
}

# built-in single-experiment configs; manifests below reference these ids
CONFIG_LIBRARY = {
    "advection-kansa-c1": {
        "experiment": "advection-kansa-c1",
        "problem": {"name": "advection"},
        "solver": {"type": "linear", "c_scale": 1},
    },
    "advection-kansa-c4": {
        "defaults": "advection-kansa-c1",
        "experiment": "advection-kansa-c4",
        "solver": {"c_scale": 4},
    },
    "advection-fdm-c1": {
        "experiment": "advection-fdm-c1",
        "problem": {"name": "advection"},
        "solver": {"type": "fdm", "c_scale": 1},
    },
    "advection-fdm-c4": {
        "defaults": "advection-fdm-c1",
        "experiment": "advection-fdm-c4",
        "solver": {"c_scale": 4},
    },
    "advection-fdm-c16": {
        "defaults": "advection-fdm-c1",
        "experiment": "advection-fdm-c16",
        "solver": {"c_scale": 16},
    },
    "advection-fdm-c100": {
        "defaults": "advection-fdm-c1",
        "experiment": "advection-fdm-c100",
        "solver": {"c_scale": 100},
    },
    "lv-kansa-c1": {
        "experiment": "lv-kansa-c1",
        "problem": {"name": "lotka_volterra"},
        "solver": {"type": "coupled_picard", "c_scale": 1},
    },
    "lv-kansa-c4": {
        "defaults": "lv-kansa-c1",
        "experiment": "lv-kansa-c4",
        "solver": {"c_scale": 4},
    },
    "maxwell-kansa-c1": {
        "experiment": "maxwell-kansa-c1",
        "problem": {"name": "maxwell"},
        "solver": {"type": "coupled", "c_scale": 1},
    },
    "maxwell-kansa-c4": {
        "defaults": "maxwell-kansa-c1",
        "experiment": "maxwell-kansa-c4",
        "solver": {"c_scale": 4},
    },
    "burgers-imex": {
        "experiment": "burgers-imex",
        "problem": {"name": "burgers"},
        "solver": {"type": "scheme", "variant": "imex", "steps": 16,
                   "c_t_scale": 1},
    },
    "burgers-backward-euler": {
        "defaults": "burgers-imex",
        "experiment": "burgers-backward-euler",
        "solver": {"variant": "backward_euler"},
    },
    "burgers-crank-nicolson": {
        "defaults": "burgers-imex",
        "experiment": "burgers-crank-nicolson",
        "solver": {"variant": "crank_nicolson"},
    },
    "burgers-fully-nonlinear": {
        "experiment": "burgers-fully-nonlinear",
        "problem": {"name": "burgers"},
        "solver": {"type": "fully_nonlinear"},
    },
    "burgers-forward-euler-ct1": {
        "experiment": "burgers-forward-euler-ct1",
        "problem": {"name": "burgers"},
        "solver": {"type": "scheme", "variant": "forward_euler", "steps": 32,
                   "c_t_scale": 1},
    },
    "burgers-forward-euler-ct2": {
        "defaults": "burgers-forward-euler-ct1",
        "experiment": "burgers-forward-euler-ct2",
        "solver": {"c_t_scale": 2},
    },
    "burgers-forward-euler-ct4": {
        "defaults": "burgers-forward-euler-ct1",
        "experiment": "burgers-forward-euler-ct4",
        "solver": {"c_t_scale": 4},
    },
    "burgers-forward-euler-ct10": {
        "defaults": "burgers-forward-euler-ct1",
        "experiment": "burgers-forward-euler-ct10",
        "solver": {"c_t_scale": 10},
    },
    "advection-inverse-beta": {
        "experiment": "advection-inverse-beta",
        "problem": {"name": "advection"},
        "solver": {"type": "linear", "c_scale": 1},
        "inverse": {"init": 0.2},
    },
    "lv-inverse-params": {
        "experiment": "lv-inverse-params",
        "problem": {"name": "lotka_volterra"},
        "solver": {"type": "coupled_picard", "c_scale": 1},
        "inverse": {"init": [1.0, 1.0, 1.0, 1.0]},
    },
    "burgers-inverse-nu-cn": {
        "experiment": "burgers-inverse-nu-cn",
        "problem": {"name": "burgers"},
        "solver": {"type": "scheme", "variant": "crank_nicolson",
                   "steps": 16, "c_t_scale": 1},
        "inverse": {"init": 0.1},
    },
    "burgers-inverse-nu-be": {
        "defaults": "burgers-inverse-nu-cn",
        "experiment": "burgers-inverse-nu-be",
        "solver": {"variant": "backward_euler"},
    },
    "burgers-inverse-nu-fn": {
        "experiment": "burgers-inverse-nu-fn",
        "problem": {"name": "burgers"},
        "solver": {"type": "fully_nonlinear"},
        "inverse": {"init": 0.1},
    },
    "tune-advection-coarse": {
        "experiment": "tune-advection-coarse",
        "problem": {"name": "advection",
                    "counts": {"n_domain": [20, 4], "n_initial": 8,
                               "n_boundary": 10}},
        "solver": {"type": "linear", "c_scale": 1},
        "tune": {"lo": 0.5, "hi": 16.0, "per_decade": 8,
                 "weights": [1e-12, 1.0, 0.0]},
    },
}

MANIFESTS = {
    "table3": ["advection-kansa-c1", "advection-kansa-c4",
               "advection-fdm-c1", "advection-fdm-c4"],
    "table7": ["lv-kansa-c1", "lv-kansa-c4",
               "maxwell-kansa-c1", "maxwell-kansa-c4"],
    "table9": ["burgers-imex", "burgers-backward-euler",
               "burgers-crank-nicolson", "burgers-fully-nonlinear"],
    "table12": ["burgers-forward-euler-ct1", "burgers-forward-euler-ct2",
                "burgers-forward-euler-ct4", "burgers-forward-euler-ct10"],
    "inverse-advection": ["advection-inverse-beta"],
    "inverse-lv": ["lv-inverse-params"],
    "inverse-burgers": ["burgers-inverse-nu-cn", "burgers-inverse-nu-be",
                        "burgers-inverse-nu-fn"],
}

_GLOBAL_DEFAULTS = {
    "experiment": "experiment",
    "problem": {"name": "advection"},
    "solver": {"type": "linear"},
    "seed": 0,
    "output": "results",
}


def _deep_merge(base, override):
    out = dict(base)
    for k, v in override.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _deep_merge(out[k], v)
        else:
            out[k] = v
    return out


def load_config(source):
    """source: dict, path to a JSON file, or a built-in config name."""
    if isinstance(source, dict):
        return dict(source)
    if source in CONFIG_LIBRARY:
        return dict(CONFIG_LIBRARY[source])
    if os.path.exists(source):
        with open(source, "r", encoding="utf-8") as fh:
            try:
                return json.load(fh)
            except json.JSONDecodeError as exc:
                raise ConfigError("invalid JSON in %s: %s" % (source, exc))
    raise ConfigError("no such config: %r" % (source,))


def resolve_config(cfg):
    """Expand the `defaults` inheritance chain and fill global defaults.
    Idempotent: resolving a resolved config is a no-op."""
    cfg = dict(cfg)
    seen = set()
    while "defaults" in cfg:
        name = cfg.pop("defaults")
        if isinstance(name, str):
            if name in seen:
                raise ConfigError("defaults cycle at %r" % name)
            seen.add(name)
        base = load_config(name)
        cfg = _deep_merge(base, cfg)
    out = _deep_merge(_GLOBAL_DEFAULTS, cfg)
    solver = out.get("solver", {})
    stype = solver.get("type")
    if stype not in _SOLVER_PROBLEM:
        raise ConfigError("unknown solver type %r" % (stype,))
    pname = out.get("problem", {}).get("name")
    if pname != _SOLVER_PROBLEM[stype]:
        raise ConfigError("solver %r expects problem %r, got %r"
                          % (stype, _SOLVER_PROBLEM[stype], pname))
    return out


def _setup_from_config(cfg, seed=None):
    prob = cfg["problem"]
    name = prob["name"]
    if name not in _FACTORIES:
        raise ConfigError("unknown problem %r" % (name,))
    params = dict(prob.get("params", {}))
    random_ic = params.pop("u0", None)
    try:
        setup = _FACTORIES[name](**params)
    except TypeError as exc:
        raise ConfigError("bad problem params: %s" % exc)
    counts = prob.get("counts")
    n_test = prob.get("n_test")
    if counts or n_test:
        counts = {k: tuple(v) if isinstance(v, list) else v
                  for k, v in (counts or {}).items()}
        setup = setup.replace(counts=counts or None,
                              n_test=tuple(n_test) if isinstance(n_test, list)
                              else n_test)
    if random_ic == "random":
        if name != "advection":
            raise ConfigError("random initial profile only supported on "
                              "the transport problem")
        eff = cfg.get("seed", 0) if seed is None else seed
        setup.params["u0"] = problems.advection_random_ic(int(eff))
    elif random_ic is not None:
        raise ConfigError("u0 must be \"random\" or omitted")
    return setup


# ---------------------------------------------------------------------------
# record assembly and serialization

def _to_jsonable(v):
    if isinstance(v, np.ndarray):
        return v.tolist()
    if isinstance(v, (np.floating, np.integer)):
        return v.item()
    if isinstance(v, float) and not np.isfinite(v):
        return repr(v)
    if isinstance(v, dict):
        return {k: _to_jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_to_jsonable(x) for x in v]
    return v


def _field_payload(field):
    return {"family": field.kernel.family, "epsilon": field.kernel.epsilon,
            "centers": field.centers.tolist(),
            "coeffs": np.asarray(field.coeffs).tolist()}


def format_number(v):
    """Fixed CSV float format: scientific below 1e-3, compact otherwise."""
    if v is None:
        return ""
    if isinstance(v, bool):
        return "stable" if v else "unstable"
    if isinstance(v, str):
        return v
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    v = float(v)
    if not np.isfinite(v):
        return repr(v)
    if v != 0 and abs(v) < 1e-3:
        return "%.6e" % v
    return "%.10g" % v


def atomic_write(path, text):
    """No partial files: write to a temp file in the target directory and
    rename into place."""
    path = os.path.abspath(path)
    os.makedirs(os.path.dirname(path), exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=os.path.dirname(path),
                               prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


SUITE_COLUMNS = ("experiment", "problem", "solver", "c_scale", "c_t_scale",
                 "field", "rel_l2", "l2", "stable", "cond", "param_name",
                 "initial", "recovered", "reference", "abs_error", "n_fev",
                 "error")

INVERSE_COLUMNS = ("param_name", "initial", "recovered", "reference",
                   "abs_error", "n_fev", "wall_time_s")


def rows_to_csv(rows, columns):
    lines = [",".join(columns)]
    for row in rows:
        lines.append(",".join(format_number(row.get(c)) for c in columns))
    return "\n".join(lines) + "\n"


def record_rows(record):
    """Flatten a result record into suite-table rows: one per field for
    forward runs, one per parameter for inverse runs."""
    base = dict(experiment=record["experiment"], problem=record["problem"],
                solver=record["solver"], c_scale=record.get("c_scale"),
                c_t_scale=record.get("c_t_scale"),
                stable=record.get("stable"), error=record.get("error"))
    rows = []
    if record.get("error") is not None and "params" not in record \
            and "rel_l2" not in record:
        return [base]
    if "params" in record:
        names = record["param_names"]
        for i, name in enumerate(names):
            row = dict(base)
            row.update(param_name=name, initial=record["initial"][i],
                       recovered=record["params"][i],
                       reference=record["reference"][i],
                       abs_error=abs(record["params"][i]
                                     - record["reference"][i]),
                       n_fev=record.get("n_fev"))
            rows.append(row)
        return rows
    rel = record.get("rel_l2")
    l2 = record.get("l2")
    cond = record.get("cond")
    if isinstance(rel, dict):
        for name in sorted(rel):
            row = dict(base)
            row.update(field=name, rel_l2=rel[name],
                       l2=l2[name] if isinstance(l2, dict) else l2, cond=cond)
            rows.append(row)
    else:
        row = dict(base)
        row.update(field="u", rel_l2=rel, l2=l2, cond=cond)
        rows.append(row)
    return rows


_ROW_SORT_COLS = ("problem", "solver", "c_scale", "c_t_scale", "field",
                  "param_name", "experiment")


def sort_rows(rows):
    def key(row):
        out = []
        for c in _ROW_SORT_COLS:
            v = row.get(c)
            out.append((v is None, str(v) if not isinstance(v, (int, float))
                        else "%020.6f" % v))
        return tuple(out)

    return sorted(rows, key=key)


# ---------------------------------------------------------------------------
# experiment execution

def run_forward(cfg, allow_unstable=False, seed=None):
    """Execute one forward experiment; returns the full result record."""
    setup = _setup_from_config(cfg, seed)
    solver = cfg["solver"]
    stype = solver["type"]
    c_scale = int(solver.get("c_scale", 1))
    if stype == "linear":
        res = problems.advection_forward(setup, c_scale)
    elif stype == "fdm":
        res = problems.fdm_forward(setup, c_scale, allow_unstable)
    elif stype == "coupled":
        res = problems.maxwell_forward(setup, c_scale)
    elif stype == "coupled_picard":
        res = problems.lv_forward(setup, c_scale)
    elif stype == "scheme":
        res = problems.burgers_scheme_forward(
            setup, solver.get("variant", "crank_nicolson"),
            int(solver.get("steps", 16)), int(solver.get("c_t_scale", 1)))
    elif stype == "fully_nonlinear":
        res = problems.burgers_fn_forward(setup)
    else:
        raise ConfigError("unknown solver type %r" % (stype,))

    record = {k: v for k, v in res.items()
              if k not in ("field", "fields", "colloc")}
    if "field" in res:
        record["field_names"] = ["u"]
        record["field_data"] = {"u": _field_payload(res["field"])}
    if "fields" in res:
        names = ["E", "B"] if record["problem"] == "maxwell" else ["x", "y"]
        record["field_names"] = names
        record["field_data"] = {n: _field_payload(f)
                                for n, f in zip(names, res["fields"])}
    record["experiment"] = cfg["experiment"]
    record["seed"] = cfg.get("seed", 0) if seed is None else seed
    return record


def run_inverse(cfg, seed=None):
    setup = _setup_from_config(cfg, seed)
    solver = cfg["solver"]
    inv_cfg = cfg.get("inverse")
    if inv_cfg is None:
        raise ConfigError("config has no inverse section")
    name = setup.name
    t_start = time.perf_counter()
    if name == "advection":
        init = float(inv_cfg.get("init", 0.2))
        beta, loss, n_fev = infer_advection_beta(
            setup, int(solver.get("c_scale", 1)), init)
        params, names = [beta], ["beta"]
        reference, initial = [setup.params["beta"]], [init]
    elif name == "lotka_volterra":
        init = [float(v) for v in inv_cfg.get("init", [1.0, 1.0, 1.0, 1.0])]
        pstar, info = infer_lotka_volterra(setup, init=init, details=True)
        params = list(pstar)
        names = ["alpha", "beta", "delta", "gamma"]
        reference = [setup.params[n] for n in names]
        initial, loss, n_fev = init, info["loss"], info["n_fev"]
    elif name == "burgers":
        init = float(inv_cfg.get("init", 0.1))
        scheme = solver.get("variant", "crank_nicolson") \
            if solver["type"] == "scheme" else "fully_nonlinear"
        nu_hat, info = infer_burgers_nu(scheme, setup, init=init,
                                        steps=int(solver.get("steps", 16)),
                                        details=True)
        params, names = [nu_hat], ["nu"]
        reference, initial = [setup.params["nu"]], [init]
        loss, n_fev = info["loss"], info["n_fev"]
    else:
        raise ConfigError("no inverse driver for problem %r" % name)
    wall = time.perf_counter() - t_start
    solver_label = solver.get("variant", solver["type"]) \
        if solver["type"] in ("scheme",) else solver["type"]
    return dict(experiment=cfg["experiment"], problem=name,
                solver=solver_label, c_scale=int(solver.get("c_scale", 1)),
                params=params, param_names=names, initial=initial,
                reference=reference, loss=loss, n_fev=n_fev,
                wall_time_s=wall,
                seed=cfg.get("seed", 0) if seed is None else seed)


def run_tune(cfg):
    setup = _setup_from_config(cfg)
    t_cfg = cfg.get("tune") or {}
    if setup.name != "advection":
        raise ConfigError("tuning is wired for the transport problem only")
    grid = t_cfg.get("grid")
    if grid is None:
        grid = default_grid(t_cfg.get("lo", 1e-2), t_cfg.get("hi", 1e2),
                            t_cfg.get("per_decade", 16))
    weights = t_cfg.get("weights")
    config = TuneConfig(grid=np.asarray(grid, float),
                        weights=tuple(weights) if weights else None)
    c_scale = int(cfg["solver"].get("c_scale", 1))

    def problem(eps):
        F, h, colloc, kernel = problems.advection_system(setup, c_scale,
                                                         epsilon=eps)
        return F, h, colloc.points, kernel, colloc

    eps_star, trace = tune_linear(problem, config)
    return eps_star, trace


def trace_to_csv(trace):
    cols = ("epsilon", "cond", "tv", "data_loss", "objective", "selected")
    lines = [",".join(cols)]
    for e in trace:
        vals = [format_number(getattr(e, c)) for c in cols[:-1]]
        vals.append("true" if e.selected else "false")
        lines.append(",".join(vals))
    return "\n".join(lines) + "\n"


def _write_record(record, out_dir):
    payload = _to_jsonable(record)
    text = json.dumps(payload, indent=2, sort_keys=True) + "\n"
    atomic_write(os.path.join(out_dir, record["experiment"] + ".json"), text)


def run_suite(names, parallel=1, allow_unstable=False, seed=None,
              out_dir="results"):
    """Run a list of config names/paths; failures are isolated per row.
    Returns (rows, records)."""
    configs = [resolve_config(load_config(n)) for n in names]

    def one(cfg):
        try:
            if "inverse" in cfg:
                return run_inverse(cfg, seed=seed)
            return run_forward(cfg, allow_unstable=allow_unstable, seed=seed)
        except Exception as exc:
            return dict(experiment=cfg.get("experiment", "?"),
                        problem=cfg.get("problem", {}).get("name", "?"),
                        solver=cfg.get("solver", {}).get("type", "?"),
                        c_scale=cfg.get("solver", {}).get("c_scale"),
                        error="%s: %s" % (type(exc).__name__, exc))

    if parallel > 1 and len(configs) > 1:
        with ThreadPoolExecutor(max_workers=parallel) as pool:
            records = list(pool.map(one, configs))
    else:
        records = [one(c) for c in configs]
    rows = []
    for rec in records:
        rec_out = dict(rec)
        for rec_row in record_rows(rec_out):
            rows.append(rec_row)
        _write_record(rec_out, out_dir)
    return sort_rows(rows), records


def summary_table(rows):
    cols = ("experiment", "solver", "c_scale", "c_t_scale", "field",
            "rel_l2", "param_name", "recovered", "stable", "error")
    header = [c for c in cols]
    data = [[format_number(r.get(c)) for c in cols] for r in rows]
    widths = [max(len(h), *(len(d[i]) for d in data)) if data else len(h)
              for i, h in enumerate(header)]
    out = ["  ".join(h.ljust(w) for h, w in zip(header, widths))]
    for d in data:
        out.append("  ".join(v.ljust(w) for v, w in zip(d, widths)))
    return "\n".join(out) + "\n"


# ---------------------------------------------------------------------------
# plot data

def emit_plot_data(record, grid=None, field=None):
    """Rows (x, t, u_pred, u_exact, abs_err) for external plotting.

    Without a grid the stored test-grid predictions are reformatted; with a
    grid spec the stored coefficients are re-evaluated on the requested grid.
    """
    pred = record.get("pred")
    truth = record.get("truth")
    pname = record["problem"]
    if isinstance(pred, dict):
        raise ConfigError("record has multiple fields; pass --field")
    names = record.get("field_names") or ["u"]
    if len(names) > 1:
        if field is None:
            raise ConfigError("record has fields %s; pass --field"
                              % ", ".join(names))
        if field not in names:
            raise ConfigError("no field %r; have %s"
                              % (field, ", ".join(names)))
        idx = names.index(field)
        if pred is not None:
            pred = pred[idx]
            truth = truth[idx]
    if grid is not None:
        fd = record.get("field_data")
        if not fd:
            raise ConfigError("record stores no coefficients; "
                              "re-gridding unavailable")
        key = field if field else names[0]
        payload = fd[key]
        from .collocation import SolutionField
        from .kernels import RbfKernel
        sf = SolutionField(np.asarray(payload["centers"], float),
                           RbfKernel(payload["family"], payload["epsilon"]),
                           np.asarray(payload["coeffs"], float))
        nx, nt = grid
        setup = _FACTORIES[pname]()
        xs = np.linspace(setup.box[0][0], setup.box[0][1], nx)
        if len(setup.box) == 2:
            ts = np.linspace(setup.box[1][0], setup.box[1][1], nt)
            X, T = np.meshgrid(xs, ts, indexing="ij")
            Q = np.column_stack([X.ravel(), T.ravel()])
        else:
            ts = np.array([0.0])
            X = xs[:, None]
            T = np.zeros_like(X)
            Q = X
        P = sf.evaluate(Q).reshape(len(xs), len(ts))
        U = _reference_grid(pname, record, xs, ts, key).reshape(P.shape)
        pred, truth = P, U
        x_axis, t_axis = xs, ts
    else:
        if pred is None or truth is None:
            raise ConfigError("record has no stored predictions")
        pred = np.asarray(pred, float)
        truth = np.asarray(truth, float)
        x_axis = np.asarray(record.get("test_x", record.get("test_t")), float)
        t_axis = np.asarray(record.get("test_t"), float)
        if pred.ndim == 1:
            pred = pred[:, None]
            truth = truth[:, None]
            x_axis = np.asarray(record["test_t"], float)
            t_axis = np.array([0.0])
    lines = ["x,t,u_pred,u_exact,abs_err"]
    for i in range(pred.shape[0]):
        for j in range(pred.shape[1]):
            lines.append(",".join(format_number(v) for v in
                                  (x_axis[i], t_axis[j], pred[i, j],
                                   truth[i, j],
                                   abs(pred[i, j] - truth[i, j]))))
    return "\n".join(lines) + "\n"


def _reference_grid(pname, record, xs, ts, field_name):
    setup = _FACTORIES[pname]()
    X, T = (np.meshgrid(xs, ts, indexing="ij") if len(setup.box) == 2
            else (xs[:, None], np.zeros((len(xs), 1))))
    if pname == "advection":
        return problems.advection_exact(X, T, setup.params["beta"])
    if pname == "burgers":
        return problems.burgers_exact_steady(X, T, setup.params["nu"])
    if pname == "maxwell":
        e, b = problems.maxwell_exact(X, T, setup.params["c"])
        return e if field_name == "E" else b
    if pname == "lotka_volterra":
        p = setup.params
        ref = problems.lv_reference(
            (p["alpha"], p["beta"], p["delta"], p["gamma"]),
            p["x0"], p["y0"], xs)
        return ref[:, 0 if field_name == "x" else 1][:, None]
    raise ConfigError("no reference for problem %r" % pname)


# ---------------------------------------------------------------------------
# commands

@click.group(name="solver")
def main():
    """Mesh-free PDE benchmark runner."""


def _load(config_path, seed):
    cfg = resolve_config(load_config(config_path))
    if seed is not None:
        cfg["seed"] = seed
    return cfg


def _fail(exc):
    code = 1 if isinstance(exc, (ConfigError, json.JSONDecodeError)) else 2
    click.echo("error: %s" % exc, err=True)
    sys.exit(code)


@main.command()
@click.option("--config", "config_path", required=True)
@click.option("--out", "out_dir", default=None)
@click.option("--seed", type=int, default=None)
@click.option("--allow-unstable", is_flag=True, default=False)
def forward(config_path, out_dir, seed, allow_unstable):
    """Run one forward experiment from a JSON config."""
    try:
        cfg = _load(config_path, seed)
        record = run_forward(cfg, allow_unstable=allow_unstable, seed=seed)
    except (ConfigError, FileNotFoundError) as exc:
        _fail(ConfigError(str(exc)))
    except Exception as exc:
        _fail(exc)
    out = out_dir or cfg.get("output", "results")
    _write_record(record, out)
    rows = sort_rows(record_rows(record))
    atomic_write(os.path.join(out, record["experiment"] + ".csv"),
                 rows_to_csv(rows, SUITE_COLUMNS))
    click.echo(summary_table(rows))


@main.command()
@click.option("--config", "config_path", required=True)
@click.option("--out", "out_dir", default=None)
@click.option("--seed", type=int, default=None)
def inverse(config_path, out_dir, seed):
    """Run one inverse recovery from a JSON config."""
    try:
        cfg = _load(config_path, seed)
        record = run_inverse(cfg, seed=seed)
    except (ConfigError, FileNotFoundError) as exc:
        _fail(ConfigError(str(exc)))
    except Exception as exc:
        _fail(exc)
    out = out_dir or cfg.get("output", "results")
    _write_record(record, out)
    rows = []
    for i, name in enumerate(record["param_names"]):
        rows.append(dict(param_name=name, initial=record["initial"][i],
                         recovered=record["params"][i],
                         reference=record["reference"][i],
                         abs_error=abs(record["params"][i]
                                       - record["reference"][i]),
                         n_fev=record["n_fev"],
                         wall_time_s=record["wall_time_s"]))
    atomic_write(os.path.join(out, record["experiment"] + ".csv"),
                 rows_to_csv(rows, INVERSE_COLUMNS))
    click.echo(summary_table(sort_rows(record_rows(record))))


@main.command()
@click.option("--config", "config_path", required=True)
@click.option("--out", "out_dir", default=None)
def tune(config_path, out_dir):
    """Shape-parameter grid search; writes the scored trace as CSV."""
    try:
        cfg = _load(config_path, None)
        eps_star, trace = run_tune(cfg)
    except (ConfigError, FileNotFoundError) as exc:
        _fail(ConfigError(str(exc)))
    except Exception as exc:
        _fail(exc)
    out = out_dir or cfg.get("output", "results")
    atomic_write(os.path.join(out, cfg["experiment"] + "-tune.csv"),
                 trace_to_csv(trace))
    click.echo("selected epsilon = %s" % format_number(eps_star))


@main.command()
@click.option("--manifest", required=True)
@click.option("--parallel", type=int, default=1)
@click.option("--out", "out_dir", default="results")
@click.option("--seed", type=int, default=None)
@click.option("--allow-unstable", is_flag=True, default=False)
def bench(manifest, parallel, out_dir, seed, allow_unstable):
    """Run a built-in manifest (or a JSON file listing config names)."""
    try:
        if manifest in MANIFESTS:
            names = MANIFESTS[manifest]
            label = manifest
        elif os.path.exists(manifest):
            with open(manifest, "r", encoding="utf-8") as fh:
                names = json.load(fh)
            label = os.path.splitext(os.path.basename(manifest))[0]
        else:
            raise ConfigError("no such manifest: %r (built-ins: %s)"
                              % (manifest, ", ".join(sorted(MANIFESTS))))
        rows, _ = run_suite(names, parallel=parallel,
                            allow_unstable=allow_unstable, seed=seed,
                            out_dir=out_dir)
    except ConfigError as exc:
        _fail(exc)
    atomic_write(os.path.join(out_dir, label + ".csv"),
                 rows_to_csv(rows, SUITE_COLUMNS))
    table = summary_table(rows)
    atomic_write(os.path.join(out_dir, label + "-summary.txt"), table)
    click.echo(table)


@main.command()
@click.option("--record", "record_path", required=True)
@click.option("--grid", default=None, help="e.g. 64x8 (re-evaluates "
              "stored coefficients; omit to reuse the stored test grid)")
@click.option("--field", default=None)
@click.option("--out", "out_path", default=None)
def plot(record_path, grid, field, out_path):
    """Write surface.csv (x, t, u_pred, u_exact, abs_err) from a record."""
    try:
        with open(record_path, "r", encoding="utf-8") as fh:
            record = json.load(fh)
        gspec = None
        if grid:
            try:
                nx, nt = (int(v) for v in grid.lower().split("x"))
            except ValueError:
                raise ConfigError("grid must look like 64x8")
            gspec = (nx, nt)
        text = emit_plot_data(record, gspec, field)
    except (ConfigError, FileNotFoundError, json.JSONDecodeError) as exc:
        _fail(ConfigError(str(exc)))
    except Exception as exc:
        _fail(exc)
    out = out_path or os.path.join(os.path.dirname(record_path) or ".",
                                   "surface.csv")
    atomic_write(out, text)
    click.echo("wrote %s" % out)


if __name__ == "__main__":
    main()
