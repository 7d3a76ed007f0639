"""Bundled experiment configurations for the four reference figures.

Horizons, time steps and monitor thresholds are not given with the original
figures; the values here are engineering defaults and are echoed in every
metadata file.
"""

import copy
import math

_STEP_FINE = 2e-5  # resolves margin/det floors of 1e-4 (see README)

_FIG1 = {
    "observable": {"name": "mean_and_second_1d"},
    "driver": {"name": "mean_variance", "delta": 1.0},
    "dynamics": {},
    "sim": {
        "n_particles": 1000, "dt": _STEP_FINE, "t_final": 2.0, "seed_common": 0, "seed_private": 0,
        "init": {"kind": "gaussian", "mean": 0.0, "std": 1.0},
        "monitor": {"margin_floor": 1e-4, "det_floor": 1e-4},
        "record_stride": 50,
    },
    "output": {"prefix": "fig1"},
}

_FIG2 = {
    "observable": {"name": "second_moment_1d"},
    "driver": {"name": "brownian"},
    "dynamics": {},
    "sim": {
        "n_particles": 1000, "dt": _STEP_FINE, "t_final": 2.0, "seed_common": 0, "seed_private": 0,
        "init": {"kind": "gaussian", "mean": 0.0, "std": 1.0},
        "monitor": {"margin_floor": 1e-4, "det_floor": 1e-4},
        "record_stride": 50,
    },
    "output": {"prefix": "fig2"},
}

_FIG3 = copy.deepcopy(_FIG2)
_FIG3["observable"] = {"name": "tanh_1d"}
_FIG3["output"] = {"prefix": "fig3"}

FIG4_T, FIG4_DT, FIG4_DELTA = 50.0, 1e-3, 3.0
FIG4_RECORD, FIG4_SNAPSHOT, FIG4_BURN_IN = 10, 500, 5.0
FIG4_T_RELAX = 20.0

_FIG4 = {
    "observable": {"name": "mean_and_second_1d"},
    "driver": {"name": "mean_variance", "delta": FIG4_DELTA},
    "dynamics": {"potential": "double_well", "interaction": "quadratic", "sigma_tilde": 0.7},
    "sim": {
        "n_particles": 1000, "dt": FIG4_DT, "t_final": FIG4_T, "seed_common": 0, "seed_private": 0,
        "gamma": 0.0, "gamma_mode": "paper_literal",
        # N(-3/2, 1/2): the second parameter is the variance
        "init": {"kind": "gaussian", "mean": -1.5, "std": math.sqrt(0.5)},
        "record_stride": FIG4_RECORD, "snapshot_stride": FIG4_SNAPSHOT,
    },
    "sweep": {"burn_in": FIG4_BURN_IN},
    "output": {"prefix": "fig4"},
}

# (panel label, overrides applied to the base config)
PANELS = {
    "fig1": (_FIG1, [("delta1", {"driver": {"delta": 1.0}}), ("delta3", {"driver": {"delta": 3.0}})]),
    "fig2": (_FIG2, [("eta0", {"sim": {"eta": 0.0}}), ("eta1", {"sim": {"eta": 1.0}})]),
    "fig3": (_FIG3, [("eta0", {"sim": {"eta": 0.0}}), ("eta0.5", {"sim": {"eta": 0.5}})]),
    "fig4": (
        _FIG4,
        [("gamma0", {"sim": {"gamma": 0.0}}), ("gamma0.4", {"sim": {"gamma": 0.4}}), ("gamma0.8", {"sim": {"gamma": 0.8}})],
    ),
}


def _merge(base, over):
    out = copy.deepcopy(base)
    for k, v in over.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


def panels(figure):
    """List of (label, config dict) for a figure name."""
    base, items = PANELS[figure]
    return [(label, _merge(base, over)) for label, over in items]


def fig4_config(gamma, seed=0, **sim):
    """Config dict for one Fig.-4 panel with optional sim overrides."""
    cfg = _merge(_FIG4, {"sim": {"gamma": float(gamma), "seed_common": seed, "seed_private": seed}})
    cfg["sim"].update(sim)
    return cfg
