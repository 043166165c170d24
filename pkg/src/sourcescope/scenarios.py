"""Scenario files: a flat JSON description of one experiment.

Functions of x come from a small catalog per role instead of a general
expression parser:

  generator:  const(c) | linear(c0, c1) | custom-grid(values)
  u0:         zero | custom-grid
  catalyst h: sin(amp) | cos(amp) | affine(c0, c1) | custom-grid
  sensor:     one | x | x2 | custom-grid
  bg profile: x | one | custom-grid

Loading re-validates every model invariant and names the violated
constraint in the error.
"""
from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import ScenarioError
from .hilbert import DEFAULT_NODES, GridFunction, grid, norm
from .dynamics import (BackgroundSource, Catalyst, MultiplicationGenerator,
                       SourceModel, zero_background)
from .sampling import MeasurementConfig
from .alg1 import Alg1Params
from .alg2 import Alg2Params

_ALGORITHMS = ("1", "2", "both")


def _catalog_fn(spec, x, role, allowed):
    kind = spec.get("kind")
    if kind not in allowed:
        raise ScenarioError(
            "%s: unknown kind %r (allowed: %s)"
            % (role, kind, ", ".join(allowed)))
    if kind == "zero":
        return np.zeros_like(x)
    if kind == "one":
        return np.ones_like(x)
    if kind == "x":
        return x.copy()
    if kind == "x2":
        return x ** 2
    if kind == "const":
        return np.full_like(x, float(spec["c"]))
    if kind == "linear":
        return float(spec.get("c0", 0.0)) + float(spec.get("c1", 1.0)) * x
    if kind == "affine":
        return float(spec.get("c0", 0.0)) + float(spec.get("c1", 1.0)) * x
    if kind == "sin":
        return float(spec.get("amp", 1.0)) * np.sin(x)
    if kind == "cos":
        return float(spec.get("amp", 1.0)) * np.cos(x)
    if kind == "custom-grid":
        vals = np.asarray(spec["values"], dtype=float)
        if vals.size != x.size:
            raise ScenarioError(
                "%s: custom-grid has %d values, grid has %d nodes"
                % (role, vals.size, x.size))
        return vals
    raise ScenarioError("%s: unhandled kind %r" % (role, kind))


_GEN_KINDS = ("const", "linear", "custom-grid")
_U0_KINDS = ("zero", "custom-grid")
_H_KINDS = ("sin", "cos", "affine", "custom-grid")
_SENSOR_KINDS = ("one", "x", "x2", "custom-grid")
_PROFILE_KINDS = ("x", "one", "custom-grid")


@dataclass(frozen=True)
class Scenario:
    name: str
    model: SourceModel
    generator: MultiplicationGenerator
    cfg: MeasurementConfig
    sensors: tuple
    algorithm: str = "both"
    K: float = 1.0
    ell0: int = 3
    R: float = None

    def __post_init__(self):
        object.__setattr__(self, "sensors", tuple(self.sensors))
        if self.algorithm not in _ALGORITHMS:
            raise ScenarioError(
                "algorithm must be one of %s" % (_ALGORITHMS,))
        if self.R is None:
            object.__setattr__(
                self, "R", max(norm(g) for _, g in self.sensors))
        self.validate()

    def validate(self):
        cfg, model = self.cfg, self.model
        times = [c.t_intake for c in model.catalysts]
        for t1, t2 in zip(times, times[1:]):
            if t2 - t1 < 4 * cfg.beta + model.D - 1e-12:
                raise ScenarioError(
                    "tsep violated: intake gap %g < 4 beta + D = %g"
                    % (t2 - t1, 4 * cfg.beta + model.D))
        if self.algorithm in ("2", "both"):
            if cfg.beta >= 2 * np.pi * abs(cfg.k) / model.rho_hi:
                raise ScenarioError(
                    "algorithm 2 needs beta < 2 pi k / rho_hi")
        for t in times:
            if t >= cfg.horizon:
                raise ScenarioError(
                    "intake at t = %g is beyond horizon %g"
                    % (t, cfg.horizon))

    def alg1_params(self):
        return Alg1Params(
            K=self.K, N=self.cfg.N, beta=self.cfg.beta,
            sigma=self.cfg.sigma, D=self.model.D, H=self.model.H,
            R=self.R, L=self.model.background.L,
            rho_lo=self.model.rho_lo, rho_hi=self.model.rho_hi,
            sensors=self.sensors)

    def alg2_params(self):
        return Alg2Params(
            k=self.cfg.k, ell0=self.ell0, beta=self.cfg.beta,
            sigma=self.cfg.sigma, D=self.model.D, H=self.model.H,
            L=self.model.background.L, rho_lo=self.model.rho_lo,
            rho_hi=self.model.rho_hi, sensors=self.sensors)

    def with_overrides(self, **cfg_fields):
        """Copy with MeasurementConfig fields (and/or 'L') replaced."""
        from dataclasses import replace

        bg_l = cfg_fields.pop("L", None)
        cfg = replace(self.cfg, **cfg_fields) if cfg_fields else self.cfg
        model = self.model
        if bg_l is not None:
            bg = BackgroundSource(
                self.model.background.kind, float(bg_l),
                self.model.background.profile)
            model = SourceModel(
                u0=model.u0, catalysts=model.catalysts, background=bg,
                D=model.D, H=model.H, rho_lo=model.rho_lo,
                rho_hi=model.rho_hi)
        return Scenario(
            name=self.name, model=model, generator=self.generator,
            cfg=cfg, sensors=self.sensors, algorithm=self.algorithm,
            K=self.K, ell0=self.ell0, R=self.R)


def build_scenario(data, name="scenario"):
    """Build a validated Scenario from a parsed dictionary."""
    try:
        nodes = int(data.get("nodes", DEFAULT_NODES))
        x = grid(nodes)
        gen = MultiplicationGenerator(GridFunction(_catalog_fn(
            data["generator"], x, "generator", _GEN_KINDS)))
        u0 = GridFunction(_catalog_fn(
            data.get("u0", {"kind": "zero"}), x, "u0", _U0_KINDS))
        catalysts = []
        for i, spec in enumerate(data.get("catalysts", [])):
            h = GridFunction(_catalog_fn(
                spec["h"], x, "catalysts[%d].h" % i, _H_KINDS))
            catalysts.append(Catalyst(
                h=h, rho=float(spec["rho"]),
                t_intake=float(spec["t_intake"])))
        bg_spec = data.get("background", {"kind": "zero"})
        if bg_spec.get("kind") == "zero":
            background = zero_background(nodes)
        else:
            profile = GridFunction(_catalog_fn(
                bg_spec.get("profile", {"kind": "x"}), x,
                "background.profile", _PROFILE_KINDS))
            background = BackgroundSource(
                bg_spec["kind"], float(bg_spec["L"]), profile)
        sensors = []
        for sid, spec in data["sensors"]:
            sensors.append((str(sid), GridFunction(_catalog_fn(
                spec, x, "sensors[%s]" % sid, _SENSOR_KINDS))))
        mc = data["measurement"]
        cfg = MeasurementConfig(
            beta=float(mc["beta"]), horizon=float(mc["horizon"]),
            N=int(mc.get("N", 100)), k=int(mc.get("k", 1)),
            sigma=float(mc.get("sigma", 0.0)),
            noise_mode=mc.get("noise_mode", "zero"),
            seed=int(mc.get("seed", 0)))
        h_bound = data.get("H")
        if h_bound is None:
            h_bound = max((norm(c.h) for c in catalysts), default=0.0)
        model = SourceModel(
            u0=u0, catalysts=tuple(catalysts), background=background,
            D=float(data["D"]), H=float(h_bound),
            rho_lo=float(data["rho_lo"]), rho_hi=float(data["rho_hi"]))
        return Scenario(
            name=data.get("name", name), model=model, generator=gen,
            cfg=cfg, sensors=tuple(sensors),
            algorithm=str(data.get("algorithm", "both")),
            K=float(data.get("K", 1.0)), ell0=int(data.get("ell0", 3)),
            R=data.get("R"))
    except ScenarioError:
        raise
    except KeyError as exc:
        raise ScenarioError("missing required field %s" % exc) from exc
    except (TypeError, ValueError) as exc:
        raise ScenarioError("invalid field value: %s" % exc) from exc


def load_scenario(path):
    """Parse and validate a scenario file."""
    try:
        with open(path) as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ScenarioError("cannot read %s: %s" % (path, exc)) from exc
    except json.JSONDecodeError as exc:
        raise ScenarioError(
            "parse error in %s at line %d column %d: %s"
            % (path, exc.lineno, exc.colno, exc.msg)) from exc
    if not isinstance(data, dict):
        raise ScenarioError("scenario file must contain a JSON object")
    return build_scenario(data, name=str(path))


def paper_scenario(**overrides):
    """The benchmark configuration: three catalysts on a unit generator.

    a = 1, u0 = 0; h1 = 3 sin x (rho 1, t 0.25), h2 = 2.5 cos x (rho 2,
    t 2.54), h3 = x + 2 (rho 3, t 4.78); background x e^{-Lt} with
    L = 1e-2; sensors 1, x, x^2; beta = 0.01, horizon 5, sigma = 1e-3.
    """
    data = {
        "name": "paper_fig1",
        "nodes": DEFAULT_NODES,
        "generator": {"kind": "const", "c": 1.0},
        "u0": {"kind": "zero"},
        "catalysts": [
            {"h": {"kind": "sin", "amp": 3.0}, "rho": 1.0,
             "t_intake": 0.25},
            {"h": {"kind": "cos", "amp": 2.5}, "rho": 2.0,
             "t_intake": 2.54},
            {"h": {"kind": "affine", "c0": 2.0, "c1": 1.0}, "rho": 3.0,
             "t_intake": 4.78},
        ],
        "background": {"kind": "exp_decay", "L": 0.01,
                       "profile": {"kind": "x"}},
        "sensors": [["g1", {"kind": "one"}], ["g2", {"kind": "x"}],
                    ["g3", {"kind": "x2"}]],
        "D": 2.0,
        "rho_lo": 0.5,
        "rho_hi": 3.5,
        "measurement": {"beta": 0.01, "horizon": 5.0, "N": 100, "k": 1,
                        "sigma": 1e-3, "noise_mode": "uniform",
                        "seed": 20260824},
        "algorithm": "both",
        "K": 1.0,
        "ell0": 3,
    }
    measurement_keys = ("beta", "horizon", "N", "k", "sigma",
                        "noise_mode", "seed")
    for key, value in overrides.items():
        if key in measurement_keys:
            data["measurement"][key] = value
        elif key == "L":
            data["background"]["L"] = value
        elif key in data:
            data[key] = value
        else:
            raise ScenarioError(
                "paper_scenario: unknown override %r" % key)
    return data


_H_CHOICES = (
    lambda rng: {"kind": "sin", "amp": float(rng.uniform(1.5, 3.0))},
    lambda rng: {"kind": "cos", "amp": float(rng.uniform(1.5, 3.0))},
    lambda rng: {"kind": "affine", "c0": float(rng.uniform(1.0, 2.5)),
                 "c1": float(rng.uniform(-1.0, 1.0))},
)


def random_scenario(seed, n_catalysts=None, catalyst_free=False,
                    sigma=1e-3, noise_mode="uniform", mass_scale=1.0):
    """A randomized scenario dict respecting the separation constraint.

    Catalyst masses stay comparable to the benchmark so detection operates
    in its intended regime; `mass_scale` shrinks them for the undetectable
    edge cases.
    """
    rng = np.random.default_rng(seed)
    beta = 0.01
    d_sep = float(rng.uniform(1.5, 2.2))
    if catalyst_free:
        n_catalysts = 0
    elif n_catalysts is None:
        n_catalysts = int(rng.integers(1, 3))
    catalysts = []
    t = float(rng.uniform(0.2, 0.45))
    for _ in range(n_catalysts):
        spec = _H_CHOICES[rng.integers(len(_H_CHOICES))](rng)
        if mass_scale != 1.0:
            if "amp" in spec:
                spec["amp"] *= mass_scale
            else:
                spec["c0"] *= mass_scale
                spec["c1"] *= mass_scale
        catalysts.append({
            "h": spec,
            "rho": float(rng.uniform(0.7, 3.2)),
            "t_intake": round(t, 4),
        })
        t += 4 * beta + d_sep + float(rng.uniform(0.05, 0.3))
    horizon = (catalysts[-1]["t_intake"] if catalysts else 0.5) + 0.4
    bg_kind = ["exp_decay", "sinusoid", "zero"][int(rng.integers(3))]
    if bg_kind == "zero":
        background = {"kind": "zero"}
        bg_l = 0.0
    else:
        bg_l = float(rng.uniform(1e-3, 5e-2))
        background = {"kind": bg_kind, "L": bg_l, "profile": {"kind": "x"}}
    return {
        "name": "random_%d" % seed,
        "nodes": 129,
        "generator": {"kind": "const", "c": float(rng.uniform(-1.0, 1.0))},
        "u0": {"kind": "zero"},
        "catalysts": catalysts,
        "background": background,
        "sensors": [["g1", {"kind": "one"}], ["g2", {"kind": "x"}],
                    ["g3", {"kind": "x2"}]],
        "D": d_sep,
        "rho_lo": 0.5,
        "rho_hi": 3.5,
        "measurement": {"beta": beta, "horizon": round(horizon, 4),
                        "N": 50, "k": 1, "sigma": sigma,
                        "noise_mode": noise_mode, "seed": int(seed)},
        "algorithm": "both",
        "K": 1.0,
        "ell0": 3,
    }
