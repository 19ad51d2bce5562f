"""Experiment drivers. Each returns ``(rows, summary)`` for the harness to write."""
from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from typing import Callable

import numpy as np

from .ansatz import Ansatz, causal_cone
from .evolution import STRATEGIES, Strategy, evolve, ising_hamiltonian, step_strategy, trotter_error_curve
from .objective import objective
from .simcore import PauliString, TrotterTerm
from . import tdvp

EXPERIMENTS = ("evolve", "fig1a", "fig1b", "trotter_error", "cone_accuracy", "ising_ground",
               "tdvp_condition", "tdvp_noise")

_COMMON = {"seed": 0, "workers": 1, "out": None}
_MODEL = {"n": 8, "J": 1.0, "lam": 0.2, "boundary": "open", "depth": 2}

DEFAULTS: dict[str, dict] = {
    "evolve": {**_MODEL, "init": "identity", "strategy": "cone", "sweeps": 1, "order": "first",
               "kind": "real", "t": 1.0, "tau": 0.1, "schedule": None, "oracle": True,
               "checkpoint": None, "resume": False},
    "fig1a": {**_MODEL, "init": "random", "strategy": "angle", "sweeps": 1, "order": "first",
              "kind": "imaginary", "schedule": [[50, 0.05], [50, 0.03], [50, 0.01]], "oracle": False},
    "fig1b": {**_MODEL, "init": "identity", "strategy": "cone", "sweeps": 6, "order": "first",
              "kind": "real", "t": 2.0, "tau": 0.01, "oracle": True},
    "trotter_error": {**_MODEL, "n": 6, "t": 2.0, "taus": [0.01, 0.02, 0.05, 0.1, 0.2, 0.5],
                      "orders": ["first", "second"], "sweeps": 6},
    "cone_accuracy": {"n": 8, "depth": 2, "boundary": "periodic", "tau": 0.1, "n_seeds": 25,
                      "max_sweeps": 8, "strategies": list(STRATEGIES),
                      "cones": {"4": [1, 2], "6": [0, 1]}},
    "ising_ground": {"n": 8, "J": 1.0, "lams": [1.0, 4.0], "boundary": "open", "depth": 2,
                     "tau": 0.1, "steps": 20, "n_seeds": 20, "sweeps": 1, "strategies": list(STRATEGIES)},
    "tdvp_condition": {"n_params": [15, 45, 75], "n_samples": 100, "cutoff": 1e-7},
    "tdvp_noise": {"n_params": [15, 45, 75], "n_samples": 100, "cutoff": 1e-7,
                   "m_values": [1e12, 1e13, 1e14, 1e15, 1e16, 1e17, 1e18, 1e19, 1e20], "trials": 30},
}
for _d in DEFAULTS.values():
    for _k, _v in _COMMON.items():
        _d.setdefault(_k, _v)


class ConfigError(ValueError):
    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


def resolve_config(experiment: str, raw: dict) -> dict:
    """Merge ``raw`` over the experiment defaults and validate it."""
    if experiment not in EXPERIMENTS:
        raise ConfigError("experiment", f"unknown experiment {experiment!r}; choose from {', '.join(EXPERIMENTS)}")
    defaults = DEFAULTS[experiment]
    unknown = sorted(set(raw) - set(defaults) - {"experiment"})
    if unknown:
        raise ConfigError(unknown[0], f"unknown field for {experiment}")
    cfg = {**defaults, **{k: v for k, v in raw.items() if k != "experiment"}}
    _validate(experiment, cfg)
    cfg["experiment"] = experiment
    return cfg


def _need(cond: bool, field: str, message: str):
    if not cond:
        raise ConfigError(field, message)


def _is_num(x) -> bool:
    return isinstance(x, (int, float)) and not isinstance(x, bool) and np.isfinite(x)


def _is_int(x) -> bool:
    return isinstance(x, int) and not isinstance(x, bool)


def _validate(exp: str, c: dict):
    for key in ("seed", "workers"):
        _need(_is_int(c[key]) and c[key] >= (0 if key == "seed" else 1), key, "must be a non-negative integer"
              if key == "seed" else "must be a positive integer")
    if "n" in c:
        _need(_is_int(c["n"]) and c["n"] >= 4 and c["n"] % 2 == 0, "n", "must be an even integer >= 4")
    if "depth" in c:
        _need(_is_int(c["depth"]) and c["depth"] >= 1, "depth", "must be an integer >= 1")
    if "boundary" in c:
        _need(c["boundary"] in ("open", "periodic"), "boundary", "must be 'open' or 'periodic'")
    for key in ("J", "lam", "tau", "t", "cutoff"):
        if key in c and c[key] is not None:
            _need(_is_num(c[key]), key, "must be a finite number")
    if "tau" in c and c["tau"] is not None:
        _need(c["tau"] > 0, "tau", "must be positive")
    if "strategy" in c:
        _need(c["strategy"] in STRATEGIES, "strategy", f"must be one of {STRATEGIES}")
    if "strategies" in c:
        _need(isinstance(c["strategies"], list) and c["strategies"] and set(c["strategies"]) <= set(STRATEGIES),
              "strategies", f"must be a non-empty list drawn from {STRATEGIES}")
    for key in ("sweeps", "max_sweeps", "n_seeds", "steps", "n_samples", "trials"):
        if key in c:
            _need(_is_int(c[key]) and c[key] >= 1, key, "must be an integer >= 1")
    if "order" in c:
        _need(c["order"] in ("first", "second"), "order", "must be 'first' or 'second'")
    if "orders" in c:
        _need(isinstance(c["orders"], list) and c["orders"] and set(c["orders"]) <= {"first", "second"},
              "orders", "must be a list of 'first'/'second'")
    if "kind" in c:
        _need(c["kind"] in ("real", "imaginary"), "kind", "must be 'real' or 'imaginary'")
    if "init" in c:
        _need(c["init"] in ("identity", "random"), "init", "must be 'identity' or 'random'")
    if c.get("schedule") is not None:
        s = c["schedule"]
        _need(isinstance(s, list) and s, "schedule", "must be a non-empty list of [steps, tau] pairs")
        for seg in s:
            _need(isinstance(seg, (list, tuple)) and len(seg) == 2 and _is_int(seg[0]) and seg[0] > 0
                  and _is_num(seg[1]) and seg[1] > 0, "schedule", f"segment {seg!r} needs positive steps and tau")
    elif "t" in c and "tau" in c:
        _need(c.get("t") is not None and c["t"] >= 0, "t", "must be a non-negative number")
        steps = round(c["t"] / c["tau"])
        _need(abs(steps * c["tau"] - c["t"]) <= 1e-9 * max(1.0, c["t"]), "t", "must be an integer multiple of tau")
    for key in ("taus", "lams", "m_values"):
        if key in c:
            _need(isinstance(c[key], list) and c[key] and all(_is_num(x) and (x > 0 or key == "lams") for x in c[key]),
                  key, "must be a non-empty list of numbers")
    if "n_params" in c:
        _need(isinstance(c["n_params"], list) and c["n_params"] and set(c["n_params"]) <= {15, 45, 75},
              "n_params", "must be a list drawn from 15, 45, 75")
    if "cones" in c:
        _need(isinstance(c["cones"], dict) and c["cones"], "cones", "must map a label to a qubit pair")
        for label, pair in c["cones"].items():
            _need(isinstance(pair, list) and len(pair) == 2 and all(_is_int(q) and 0 <= q < c["n"] for q in pair),
                  "cones", f"entry {label!r} must be a pair of qubit indices")


def _pool_map(fn: Callable, jobs: list, workers: int) -> list:
    if workers <= 1:
        return [fn(j) for j in jobs]
    with ProcessPoolExecutor(workers) as ex:
        return list(ex.map(fn, jobs))


def _initial_ansatz(c: dict, seed: int) -> Ansatz:
    if c["init"] == "random":
        return Ansatz.random(c["n"], c["depth"], c["boundary"], np.random.default_rng(seed))
    return Ansatz.identity(c["n"], c["depth"], c["boundary"])


def run_evolve(c: dict):
    h = ising_hamiltonian(c["n"], c["J"], c["lam"], c["boundary"])
    a = _initial_ansatz(c, c["seed"])
    rec = evolve(a, h, c.get("t"), c.get("tau"), c["order"], Strategy(c["strategy"], c["sweeps"]),
                 c["kind"], oracle=c["oracle"], schedule=c.get("schedule"),
                 checkpoint=c.get("checkpoint"), resume=c.get("resume", False))
    last = rec.rows[-1]
    if c["kind"] == "imaginary":
        eg = h.ground_energy()
        rel = (last["energy"] - eg) / abs(eg)
        summary = {"final_energy": last["energy"], "ground_energy": eg, "relative_energy_error": rel}
        for r in rec.rows:
            r["rel_energy_error"] = (r["energy"] - eg) / abs(eg)
    else:
        summary = {"final_energy": last["energy"]}
        if "distance_sq" in last:
            summary["final_distance_sq"] = last["distance_sq"]
    return rec, summary


def _trotter_job(job):
    c, order = job
    h = ising_hamiltonian(c["n"], c["J"], c["lam"], c["boundary"])
    return order, trotter_error_curve(h, c["t"], c["taus"], order, c["sweeps"], c["depth"], c["boundary"])


def run_trotter_error(c: dict):
    results = _pool_map(_trotter_job, [(c, o) for o in c["orders"]], c["workers"])
    rows = [{"order": o, "tau": tau, "distance_sq": d} for o, curve in results for tau, d in curve]
    summary = {}
    for o, curve in results:
        ds = [d for _, d in curve]
        summary[f"{o}_min_tau"] = curve[int(np.argmin(ds))][0]
        summary[f"{o}_u_shaped"] = bool(0 < int(np.argmin(ds)) < len(ds) - 1)
    if {"first", "second"} <= set(c["orders"]):
        f = dict(results)
        summary["second_below_first_everywhere"] = all(s[1] < t[1] for s, t in zip(f["second"], f["first"]))
    return rows, summary


def random_pair_term(n: int, sites: tuple[int, int], tau: float, rng: np.random.Generator) -> TrotterTerm:
    """``exp(-i tau s_j (x) s_k)`` with each factor drawn from {I, X, Y, Z}."""
    f = rng.choice(list("IXYZ"), 2)
    return TrotterTerm(1.0, PauliString.from_sites(n, {sites[0]: f[0], sites[1]: f[1]}), tau, sites=sites)


def _accuracy_job(job):
    c, seed = job
    rng = np.random.default_rng(seed)
    a = Ansatz.random(c["n"], c["depth"], c["boundary"], rng)
    out = []
    for label, sites in c["cones"].items():
        term = random_pair_term(c["n"], tuple(sites), c["tau"], rng)
        for k in c["strategies"]:
            for ns in range(1, c["max_sweeps"] + 1):
                b = step_strategy(a, a, term, Strategy(k, ns))
                out.append((label, k, ns, seed, objective(a, b, term)))
    return out


def run_cone_accuracy(c: dict):
    seeds = [c["seed"] + i for i in range(c["n_seeds"])]
    raw = [r for part in _pool_map(_accuracy_job, [(c, s) for s in seeds], c["workers"]) for r in part]
    rows, summary = [], {}
    probe = Ansatz.identity(c["n"], c["depth"], c["boundary"])
    for label, sites in c["cones"].items():
        width = causal_cone(probe, sites).width
        for k in c["strategies"]:
            for ns in range(1, c["max_sweeps"] + 1):
                vals = np.array([r[4] for r in raw if r[0] == label and r[1] == k and r[2] == ns])
                rows.append({"cone": label, "cone_width": width, "strategy": k, "sweeps": ns,
                             "mean_objective": float(vals.mean()), "std_objective": float(vals.std()),
                             "sem_objective": float(vals.std() / np.sqrt(len(vals)))})
            summary[f"{label}_{k}_final_mean"] = rows[-1]["mean_objective"]
    return rows, summary


def _ground_job(job):
    c, lam, k, seed = job
    h = ising_hamiltonian(c["n"], c["J"], lam, c["boundary"])
    a = Ansatz.random(c["n"], c["depth"], c["boundary"], np.random.default_rng(seed))
    rec = evolve(a, h, c["steps"] * c["tau"], c["tau"], "first", Strategy(k, c["sweeps"]), "imaginary")
    return rec.column("energy")


def run_ising_ground(c: dict):
    seeds = [c["seed"] + i for i in range(c["n_seeds"])]
    jobs = [(c, lam, k, s) for lam in c["lams"] for k in c["strategies"] for s in seeds]
    energies = _pool_map(_ground_job, jobs, c["workers"])
    rows, summary, i = [], {}, 0
    for lam in c["lams"]:
        eg = ising_hamiltonian(c["n"], c["J"], lam, c["boundary"]).ground_energy()
        for k in c["strategies"]:
            block = np.array(energies[i:i + len(seeds)])
            i += len(seeds)
            rel = (block - eg) / abs(eg)
            for step in range(rel.shape[1]):
                rows.append({"lam": lam, "strategy": k, "step": step, "time": step * c["tau"],
                             "mean_energy": float(block[:, step].mean()), "std_energy": float(block[:, step].std()),
                             "mean_rel_error": float(rel[:, step].mean()), "std_rel_error": float(rel[:, step].std())})
            summary[f"lam{lam:g}_{k}_final_rel_error"] = float(rel[:, -1].mean())
    return rows, summary


def run_tdvp_condition(c: dict):
    res = tdvp.condition_study(c["n_params"], c["n_samples"], c["cutoff"], c["seed"])
    rows = [{k: v for k, v in r.items() if k != "kappas"} for r in res]
    return rows, {f"median_kappa_{r['n_params']}": r["median_kappa"] for r in res}


def run_tdvp_noise(c: dict):
    rows, summary = [], {}
    for p in c["n_params"]:
        system = tdvp.representative_system(p, c["seed"], c["n_samples"], c["cutoff"])
        curve, slope = tdvp.noise_scaling(system, c["m_values"], c["trials"], seed=c["seed"])
        rows += [{"n_params": p, "kappa": system.kappa, "m": m, "rel_error_B": e} for m, e in curve]
        summary[f"slope_{p}"] = slope
        summary[f"kappa_{p}"] = system.kappa
    return rows, summary


def run(c: dict):
    """Dispatch on ``c['experiment']``; returns ``(rows or RunRecord, summary)``."""
    exp = c["experiment"]
    if exp in ("evolve", "fig1a", "fig1b"):
        return run_evolve(c)
    return {"trotter_error": run_trotter_error, "cone_accuracy": run_cone_accuracy,
            "ising_ground": run_ising_ground, "tdvp_condition": run_tdvp_condition,
            "tdvp_noise": run_tdvp_noise}[exp](c)
