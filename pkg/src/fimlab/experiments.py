"""Named experiments: desk-scale defaults, override schema and drivers.

Every driver takes resolved parameters, a master seed and a worker count and
returns a ``ResultTable``. Randomness flows from the master seed through
named substreams, so the worker count never changes the result.
"""
from __future__ import annotations

import copy
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import diagnostics, mcfim, spsa
from .covariance import discrepancy_study, expected_fim_scaled, observed_fim
from .exceptions import InvalidOverride, UnknownExperiment
from .models import (
    ExpFamilyModel,
    LinearStateSpaceModel,
    MixtureGaussianModel,
    SignalPlusNoiseModel,
    expfam_lemma6_gap,
)
from .numerics import stream_for
from .solvers import fit
from .tables import ResultTable

# parameter types understood by the override checker
INT, FLOAT, VECTOR, INTLIST, STR = "int", "float", "vector", "intlist", "str"


@dataclass
class Experiment:
    name: str
    table: str
    description: str
    runner: Callable
    desk: dict
    paper: dict = field(default_factory=dict)
    schema: dict = field(default_factory=dict)
    reps_keys: dict = field(default_factory=dict)
    seconds_per_unit: float = 1e-3
    units: Callable = None

    def resolve(self, overrides=None, scale="desk", reps=None):
        """Defaults for ``scale`` with ``overrides`` and then ``reps`` applied."""
        if scale not in ("desk", "paper"):
            raise InvalidOverride(f"scale must be 'desk' or 'paper', not {scale!r}")
        params = copy.deepcopy(self.desk)
        if scale == "paper":
            params.update(copy.deepcopy(self.paper))
        overrides = dict(overrides or {})
        if reps is not None:
            overrides["reps"] = reps
        for key, value in overrides.items():
            if key == "reps":
                continue
            if key not in self.schema:
                allowed = ", ".join(sorted(set(self.schema) | {"reps"}))
                raise InvalidOverride(f"{self.name} has no parameter {key!r}; allowed: {allowed}")
            params[key] = check_value(key, value, self.schema[key])
        if "reps" in overrides:
            count = check_value("reps", overrides["reps"], INT)
            for key, factor in self.reps_keys.items():
                params[key] = int(factor * count)
        return params

    def estimated_seconds(self, params):
        return self.seconds_per_unit * (self.units(params) if self.units else 1.0)

    def run(self, params, seed=0, threads=1):
        table = self.runner(params, int(seed), threads)
        table.metadata = {
            "experiment": self.name,
            "paper_table": self.table,
            "seed": int(seed),
            "params": params,
            "failures": 0,
            **table.metadata,
        }
        return table


def check_value(key, value, kind):
    """Type-check one override value, returning it in canonical form."""
    def bad():
        return InvalidOverride(f"parameter {key!r} expects {kind}, got {value!r}")

    def is_num(v):
        return isinstance(v, (int, float)) and not isinstance(v, bool) and np.isfinite(v)

    if kind == INT:
        if not is_num(value) or float(value) != int(value):
            raise bad()
        if int(value) < 1:
            raise InvalidOverride(f"parameter {key!r} must be >= 1")
        return int(value)
    if kind == FLOAT:
        if not is_num(value):
            raise bad()
        return float(value)
    if kind in (VECTOR, INTLIST):
        if not isinstance(value, (list, tuple)) or not value or not all(is_num(v) for v in value):
            raise bad()
        if kind == INTLIST:
            if any(float(v) != int(v) or int(v) < 1 for v in value):
                raise bad()
            return [int(v) for v in value]
        return [float(v) for v in value]
    if kind == STR:
        if not isinstance(value, str):
            raise bad()
        return value
    raise ValueError(f"unknown parameter kind {kind}")


# -- covariance discrepancy studies ----------------------------------------------

_STUDY_QUANTITIES = ("target", "typical_H", "typical_F", "M_H", "M_F", "M_H-M_F", "R_H", "R_F", "se_M_H", "se_M_F")


def _study_rows(table, case, rep):
    values = {
        "target": rep.target,
        "typical_H": rep.typical_H,
        "typical_F": rep.typical_F,
        "M_H": rep.M_H,
        "M_F": rep.M_F,
        "M_H-M_F": rep.diff,
        "R_H": rep.R_H,
        "R_F": rep.R_F,
        "se_M_H": rep.se_M_H,
        "se_M_F": rep.se_M_F,
    }
    for q in _STUDY_QUANTITIES:
        table.add_matrix(q, values[q], case)


def _run_studies(title, model, cases, params, seed, threads, tag):
    table = ResultTable(title, ["case", "quantity", "row", "col", "value"])
    failures = {}
    for j, (theta, n) in enumerate(cases):
        label = f"theta*={_fmt_vec(theta)} n={n}"
        rep = discrepancy_study(
            model,
            theta,
            n,
            params["reps_outer"],
            params["reps_target"],
            seed,
            f"{tag}/case{j}",
            threads,
            params.get("max_failure_rate", 0.01),
            typical_count=params.get("typical_count", 1001),
        )
        _study_rows(table, label, rep)
        sse_h, sse_f = rep.typical_sse()
        failures[label] = {
            "target": rep.failures_target,
            "outer": rep.failures_outer,
            "used_outer": rep.used_outer,
            "typical_count": rep.typical_count,
            "typical_sse_H": sse_h,
            "typical_sse_F": sse_f,
        }
    table.metadata["failures"] = failures
    return table


def _fmt_vec(v):
    return "[" + ",".join(f"{x:g}" for x in v) + "]"


def _mixture_cases(params):
    if "theta_star" in params:
        return [(params["theta_star"], params.get("n", 100))]
    return [([0.5, 0.0, 4.0], 50), ([0.5, 0.0, 2.0], 100)] if "n" not in params else [
        ([0.5, 0.0, 4.0], params["n"]),
        ([0.5, 0.0, 2.0], params["n"]),
    ]


def run_mixture(params, seed, threads):
    model = MixtureGaussianModel.ch3(params["sigma1"], params["sigma2"])
    return _run_studies(
        "Mixture Gaussian: expected vs observed information",
        model,
        _mixture_cases(params),
        params,
        seed,
        threads,
        "mixture_table_3_1",
    )


def run_spn(params, seed, threads):
    model = SignalPlusNoiseModel(q=params["q"])
    q = model.q
    theta = params.get("theta_star", [0.0] * q + [1.0] * q)
    return _run_studies(
        "Signal plus noise: expected vs observed information",
        model,
        [(theta, params["n"])],
        params,
        seed,
        threads,
        "spn_table_3_2",
    )


def _run_statespace(params, seed, threads, tag):
    model = LinearStateSpaceModel.default_study(fim_reps=params["fim_reps"])
    return _run_studies(
        "Linear state space: expected vs observed information",
        model,
        [(params["theta_star"], params["n"])],
        params,
        seed,
        threads,
        tag,
    )


def run_statespace_100(params, seed, threads):
    return _run_statespace(params, seed, threads, "statespace_table_3_3")


def run_statespace_200(params, seed, threads):
    return _run_statespace(params, seed, threads, "statespace_table_3_4")


# -- SPSA perturbation comparison --------------------------------------------------


def _run_spsa(title, loss, params, seed, threads, tag):
    theta0 = np.asarray(params["theta0"], dtype=float)
    theta_star = loss.minimizer()
    gains_s = spsa.GainSchedule(params["a_S"], params["c_S"])
    gains_b = spsa.GainSchedule(params["a_B"], params["c_B"])
    table = ResultTable(
        title,
        ["k", "reps", "mse_bernoulli", "mse_su", "diff_b_minus_su", "diff_se", "p_su_better", "p_bernoulli_better"],
    )
    for k in params["ks"]:
        reps = params["reps_short"] if k < params["long_from"] else params["reps_long"]
        res = spsa.mse_compare(
            loss, theta_star, theta0, params["sigma2"], gains_s, gains_b, k, reps, seed, f"{tag}/k{k}", threads
        )
        table.add(k, reps, res.mse_bernoulli, res.mse_su, res.diff_mean, res.diff_se, res.p_su_better, res.p_bernoulli_better)
    table.metadata["one_iteration_condition"] = spsa.theoremA1_lhs(
        loss.grad(theta0),
        theta0,
        theta_star,
        params["sigma2"],
        gains_s.a_k(0),
        gains_b.a_k(0),
        gains_s.c_k(0),
        gains_b.c_k(0),
    )
    return table


def _quadratic_from_params(params):
    if "A" in params:
        A = np.asarray(params["A"], dtype=float)
        p = int(round(np.sqrt(A.size)))
        if p * p != A.size:
            raise InvalidOverride("A must list a square matrix row by row")
        return spsa.QuadraticLoss(A.reshape(p, p), params.get("b"))
    return spsa.coupled_quadratic()


def run_spsa_a2(params, seed, threads):
    return _run_spsa("SPSA on a quadratic loss", _quadratic_from_params(params), params, seed, threads, "spsa_table_A2")


def run_spsa_a3(params, seed, threads):
    return _run_spsa("SPSA on a non-quadratic loss", spsa.QuarticCoupledLoss(), params, seed, threads, "spsa_table_A3")


# -- Monte Carlo FIM benchmarks ------------------------------------------------------

_BENCH_COLUMNS = [
    "input",
    "N",
    "method_a",
    "mean_a",
    "ci_a_low",
    "ci_a_high",
    "method_b",
    "mean_b",
    "ci_b_low",
    "ci_b_high",
    "p_value",
]


def _bench_rows(title, model, theta, n, params, rows, seed, threads, tag, reference=None):
    table = ResultTable(title, list(_BENCH_COLUMNS))
    for j, (mode, factor, indep) in enumerate(rows):
        cfg = mcfim.HessianEstimateConfig(c=params["c"], M=params["M"], N=params["N"] * factor, mode=mode)
        bench = mcfim.fim_benchmark(
            model, theta, n, cfg, params["runs"], seed, f"{tag}/row{j}", indep, reference, threads
        )
        a, b = bench.methods
        table.add(
            mode,
            cfg.N,
            a,
            bench.mean_basic,
            bench.ci_basic[0],
            bench.ci_basic[1],
            b,
            bench.mean_feedback,
            bench.ci_feedback[0],
            bench.ci_feedback[1],
            bench.p_value,
        )
    return table


def _spn_bench(params):
    model = SignalPlusNoiseModel(q=params["q"])
    q = model.q
    theta = np.asarray(params.get("theta", [0.0] * q + [1.0] * q), dtype=float)
    return model, theta


def run_mcfim_b1(params, seed, threads):
    model, theta = _spn_bench(params)
    rows = [("gradient", 1, False), ("likelihood", 1, False), ("likelihood", 2, False)]
    return _bench_rows(
        "Monte Carlo FIM, signal plus noise: basic vs feedback",
        model, theta, params["n"], params, rows, seed, threads, "mcfim_table_B1",
    )


def run_mcfim_b2(params, seed, threads):
    model, theta = _spn_bench(params)
    return _bench_rows(
        "Monte Carlo FIM, signal plus noise: independent perturbation per observation",
        model, theta, params["n"], params, [("gradient", 1, True)], seed, threads, "mcfim_table_B2",
    )


def run_mcfim_b3(params, seed, threads):
    model = MixtureGaussianModel.five_param()
    theta = np.asarray(params["theta"], dtype=float)
    rows = [("gradient", 1, False), ("likelihood", 1, False), ("likelihood", 2, False)]
    return _bench_rows(
        "Monte Carlo FIM, five-parameter mixture: basic vs feedback",
        model, theta, params["n"], params, rows, seed, threads, "mcfim_table_B3",
    )


# -- score and cumulant diagnostics ---------------------------------------------------


def _index(*idx):
    return ",".join(str(i + 1) for i in idx)


def run_diagnostics(params, seed, threads):
    model = MixtureGaussianModel.ch3()
    theta = np.asarray(params["theta_star"], dtype=float)
    n = params["n"]
    table = ResultTable("Score and cumulant diagnostics", ["quantity", "index", "value"])
    gap = diagnostics.theorem1_gap_check(
        model,
        theta,
        n,
        params["reps_outer"],
        seed,
        reps_target=params["reps_target"],
        cumulant_reps=params["cumulant_reps"],
        score_reps=params["score_reps"],
        threads=threads,
    )
    cum = gap["cumulants"]
    z, _, y = diagnostics.score_draws(model, theta, n, params["score_reps"], cum, seed, "diagnostics-corr")
    corr = diagnostics.score_y_correlations(z, y)
    p = model.p
    for r in range(p):
        for s in range(p):
            for t in range(p):
                table.add("corr_Z_Y", _index(r, s, t), corr[r, s, t])
    table.add("max_abs_corr_Z_Y", "", float(np.max(np.abs(corr))))
    combined = np.sqrt(gap["lhs_se"] ** 2 + gap["rhs_se"] ** 2)
    for key in ("lhs", "lhs_se", "rhs", "rhs_se", "cross", "cross_se"):
        for r in range(p):
            for s in range(p):
                table.add(key, _index(r, s), gap[key][r, s])
    zscore = (gap["lhs"] - gap["rhs"]) / combined
    for r in range(p):
        for s in range(p):
            table.add("gap_z", _index(r, s), zscore[r, s])
    a9, a9_se = diagnostics.condition_a9_matrix(model, theta, n, params["a9_reps"], seed, "diagnostics-a9", cum)
    for r in range(p):
        for s in range(p):
            table.add("a9_variance", _index(r, s), a9[r, s])
            table.add("a9_se", _index(r, s), a9_se[r, s])
    for r in range(p):
        for s in range(p):
            table.add("bartlett_z", _index(r, s), cum.bartlett_gap[r, s] / cum.bartlett_se[r, s] if cum.bartlett_se[r, s] > 0 else 0.0)
    # exponential family: exact equality of the two information estimates
    pois = ExpFamilyModel("poisson")
    pt = np.array([params["poisson_theta"]])
    pcum = diagnostics.null_cumulants(pois, pt, n, 0)
    _, _, py = diagnostics.score_draws(pois, pt, n, params["score_reps"], pcum, seed, "diagnostics-poisson")
    table.add("poisson_max_abs_Y", "", float(np.max(np.abs(py))))
    data = pois.sample(pt, n, stream_for(seed, "diagnostics-lemma6", "data"))
    th = fit(pois, data).theta
    table.add("poisson_lemma6_gap", "", expfam_lemma6_gap(pois, data, th))
    table.add(
        "poisson_info_diff",
        "",
        float(np.max(np.abs(observed_fim(pois, data, th) - expected_fim_scaled(pois, th, n)))),
    )
    table.metadata["failures"] = {
        "target": gap["report"].failures_target,
        "outer": gap["report"].failures_outer,
        "used_outer": gap["report"].used_outer,
    }
    return table


# -- registry ------------------------------------------------------------------------

_CH3_SCHEMA = {
    "n": INT,
    "theta_star": VECTOR,
    "reps_outer": INT,
    "reps_target": INT,
    "max_failure_rate": FLOAT,
    "typical_count": INT,
}
_SPSA_SCHEMA = {
    "a_S": FLOAT,
    "a_B": FLOAT,
    "c_S": FLOAT,
    "c_B": FLOAT,
    "sigma2": FLOAT,
    "theta0": VECTOR,
    "ks": INTLIST,
    "reps_short": INT,
    "reps_long": INT,
    "long_from": INT,
}
_MCFIM_SCHEMA = {"n": INT, "c": FLOAT, "M": INT, "N": INT, "runs": INT}


def _ch3_units(params):
    return params["reps_outer"] + params["reps_target"]


EXPERIMENTS = {
    e.name: e
    for e in [
        Experiment(
            "mixture_table_3_1",
            "Table 3.1",
            "Two-component Gaussian mixture (weight and means unknown): M_H vs M_F at two true values",
            run_mixture,
            desk={"reps_outer": 10_000, "reps_target": 20_000, "sigma1": 1.0, "sigma2": 1.0},
            paper={"reps_outer": 100_000, "reps_target": 1_000_000},
            schema={**_CH3_SCHEMA, "sigma1": FLOAT, "sigma2": FLOAT},
            reps_keys={"reps_outer": 1, "reps_target": 2},
            seconds_per_unit=0.008,
            units=_ch3_units,
        ),
        Experiment(
            "spn_table_3_2",
            "Table 3.2",
            "Signal plus noise with diagonal signal covariance (q=4, n=80): M_H vs M_F",
            run_spn,
            desk={"reps_outer": 10_000, "reps_target": 20_000, "n": 80, "q": 4},
            paper={"reps_outer": 100_000, "reps_target": 1_000_000},
            schema={**_CH3_SCHEMA, "q": INT},
            reps_keys={"reps_outer": 1, "reps_target": 2},
            seconds_per_unit=0.01,
            units=_ch3_units,
        ),
        Experiment(
            "statespace_table_3_3",
            "Table 3.3",
            "Linear state space, unknown diagonal process noise, n=100: M_H vs M_F",
            run_statespace_100,
            desk={"reps_outer": 1000, "reps_target": 1000, "n": 100, "theta_star": [1.0, 1.0, 1.0],
                  "fim_reps": 200, "max_failure_rate": 0.15},
            paper={"reps_outer": 10_000, "reps_target": 10_000},
            schema={**_CH3_SCHEMA, "fim_reps": INT},
            reps_keys={"reps_outer": 1, "reps_target": 1},
            seconds_per_unit=0.15,
            units=_ch3_units,
        ),
        Experiment(
            "statespace_table_3_4",
            "Table 3.4",
            "Linear state space, unknown diagonal process noise, n=200: M_H vs M_F",
            run_statespace_200,
            desk={"reps_outer": 1000, "reps_target": 1000, "n": 200, "theta_star": [1.0, 1.0, 1.0],
                  "fim_reps": 200, "max_failure_rate": 0.15},
            paper={"reps_outer": 10_000, "reps_target": 10_000},
            schema={**_CH3_SCHEMA, "fim_reps": INT},
            reps_keys={"reps_outer": 1, "reps_target": 1},
            seconds_per_unit=0.3,
            units=_ch3_units,
        ),
        Experiment(
            "spsa_table_A2",
            "Table A.2",
            "SPSA on t1^2 - t1 t2 + t2^2: Bernoulli vs segmented uniform perturbations",
            run_spsa_a2,
            desk={"a_S": 0.00167, "a_B": 0.01897, "c_S": 0.1, "c_B": 0.1, "sigma2": 1.0,
                  "theta0": [0.3, 0.3], "ks": [1, 5, 10, 1000], "reps_short": 100_000,
                  "reps_long": 1000, "long_from": 100},
            paper={"reps_short": 30_000_000, "reps_long": 30_000_000},
            schema={**_SPSA_SCHEMA, "A": VECTOR, "b": VECTOR},
            reps_keys={"reps_short": 1, "reps_long": 1},
            seconds_per_unit=5e-7,
            units=lambda p: sum(k * (p["reps_short"] if k < p["long_from"] else p["reps_long"]) for k in p["ks"]),
        ),
        Experiment(
            "spsa_table_A3",
            "Table A.3",
            "SPSA on t1^4 + t1^2 + t1 t2 + t2^2: Bernoulli vs segmented uniform perturbations",
            run_spsa_a3,
            desk={"a_S": 0.05, "a_B": 0.15, "c_S": 1.0, "c_B": 1.0, "sigma2": 1.0,
                  "theta0": [1.0, 1.0], "ks": [1, 2, 5, 1000], "reps_short": 100_000,
                  "reps_long": 10_000, "long_from": 100},
            paper={"reps_short": 1_000_000, "reps_long": 1_000_000},
            schema=dict(_SPSA_SCHEMA),
            reps_keys={"reps_short": 1, "reps_long": 1},
            seconds_per_unit=5e-7,
            units=lambda p: sum(k * (p["reps_short"] if k < p["long_from"] else p["reps_long"]) for k in p["ks"]),
        ),
        Experiment(
            "mcfim_table_B1",
            "Table B.1",
            "Monte Carlo FIM for signal plus noise: basic vs feedback, gradient and likelihood-only input",
            run_mcfim_b1,
            desk={"n": 10, "q": 2, "c": 1e-4, "M": 2, "N": 2000, "runs": 20},
            paper={"n": 30, "q": 4, "N": 40_000, "runs": 50},
            schema={**_MCFIM_SCHEMA, "q": INT, "theta": VECTOR},
            reps_keys={"runs": 1},
            seconds_per_unit=6e-4,
            units=lambda p: 5 * p["N"] * p["runs"] * p["M"],
        ),
        Experiment(
            "mcfim_table_B2",
            "Table B.2",
            "Monte Carlo FIM for signal plus noise with one perturbation per observation",
            run_mcfim_b2,
            desk={"n": 10, "q": 2, "c": 1e-4, "M": 2, "N": 2000, "runs": 20},
            paper={"n": 30, "q": 4, "N": 40_000, "runs": 50},
            schema={**_MCFIM_SCHEMA, "q": INT, "theta": VECTOR},
            reps_keys={"runs": 1},
            seconds_per_unit=3e-4 * 10,
            units=lambda p: p["N"] * p["runs"] * p["M"] * p["n"] / 10,
        ),
        Experiment(
            "mcfim_table_B3",
            "Table B.3",
            "Monte Carlo FIM for a five-parameter Gaussian mixture: basic vs feedback",
            run_mcfim_b3,
            desk={"n": 50, "theta": [0.2, 0.0, 1.0, 4.0, 9.0], "c": 1e-4, "M": 2, "N": 2000, "runs": 20},
            paper={"N": 40_000, "runs": 50},
            schema={**_MCFIM_SCHEMA, "theta": VECTOR},
            reps_keys={"runs": 1},
            seconds_per_unit=6e-4,
            units=lambda p: 5 * p["N"] * p["runs"] * p["M"],
        ),
        Experiment(
            "diagnostics_ch2",
            "Chapter 2 (Theorem 1, Lemma 6)",
            "Null cumulants, score orthogonality, leading-order MSE gap and exponential-family equality",
            run_diagnostics,
            # cumulant_reps * n pooled observations should be >= 20x score_reps, so
            # error in the Y projection stays well below the correlation noise
            desk={"theta_star": [0.5, 0.0, 2.0], "n": 200, "reps_outer": 10_000, "reps_target": 20_000,
                  "score_reps": 10_000, "cumulant_reps": 1000, "a9_reps": 200, "poisson_theta": 2.0},
            paper={"reps_outer": 100_000, "reps_target": 1_000_000, "score_reps": 100_000, "cumulant_reps": 10_000},
            schema={"theta_star": VECTOR, "n": INT, "reps_outer": INT, "reps_target": INT,
                    "score_reps": INT, "cumulant_reps": INT, "a9_reps": INT, "poisson_theta": FLOAT},
            reps_keys={"reps_outer": 1, "reps_target": 2, "score_reps": 1},
            seconds_per_unit=0.01,
            units=lambda p: p["reps_outer"] + p["reps_target"] + p["score_reps"],
        ),
    ]
}


def get_experiment(name):
    try:
        return EXPERIMENTS[name]
    except KeyError:
        raise UnknownExperiment(f"unknown experiment {name!r}") from None


def list_experiments():
    """``(name, table, description)`` for every registered experiment."""
    return [(e.name, e.table, e.description) for e in EXPERIMENTS.values()]


CONFIG_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "fimlab experiment config",
    "type": "object",
    "required": ["experiment"],
    "additionalProperties": False,
    "properties": {
        "experiment": {"enum": sorted(EXPERIMENTS)},
        "scale": {"enum": ["desk", "paper"]},
        "seed": {"type": "integer", "minimum": 0},
        "overrides": {"type": "object"},
    },
}


def override_schema():
    """Per-experiment override parameters and their types."""
    return {name: dict(sorted({**e.schema, "reps": INT, "seed": INT}.items())) for name, e in EXPERIMENTS.items()}


def validate_config(cfg):
    """Check a parsed config document; returns ``(experiment, overrides, scale, seed)``."""
    if not isinstance(cfg, dict):
        raise InvalidOverride("config must be a JSON object")
    extra = set(cfg) - set(CONFIG_SCHEMA["properties"])
    if extra:
        raise InvalidOverride(f"unknown config keys: {sorted(extra)}")
    if "experiment" not in cfg:
        raise InvalidOverride("config needs an 'experiment' entry")
    exp = get_experiment(cfg["experiment"])
    scale = cfg.get("scale", "desk")
    if scale not in ("desk", "paper"):
        raise InvalidOverride(f"scale must be 'desk' or 'paper', not {scale!r}")
    seed = cfg.get("seed", 0)
    overrides = cfg.get("overrides", {})
    if not isinstance(overrides, dict):
        raise InvalidOverride("overrides must be an object")
    overrides = dict(overrides)
    if "seed" in overrides:
        if "seed" in cfg:
            raise InvalidOverride("seed given both at top level and in overrides")
        seed = overrides.pop("seed")
    if not isinstance(seed, int) or isinstance(seed, bool) or seed < 0:
        raise InvalidOverride("seed must be a non-negative integer")
    return exp, overrides, scale, seed


def run(config, threads=1, reps=None, seed=None, scale=None):
    """Run one experiment from a config mapping; CLI-style arguments win."""
    exp, overrides, cfg_scale, cfg_seed = validate_config(config)
    params = exp.resolve(overrides, scale or cfg_scale, reps)
    table = exp.run(params, cfg_seed if seed is None else seed, threads)
    table.metadata["scale"] = scale or cfg_scale
    return table
