"""Scenario configs, the run pipeline, and delimited output.

A scenario names a channel, an input state, the marginal sizes k to examine
and the checks to run; running it yields one ResultRecord per k with the
computed distances, bounds and satisfied flags.  Emission is CSV (fixed
column order, floats at 12 significant digits) or JSON mirroring the field
names; both are byte-stable across runs unless timings are requested.
"""

from __future__ import annotations

import csv
import io
import json
import time
from dataclasses import dataclass, fields
from typing import Sequence

import numpy as np

from .channels import SDIChannelSpec, apply, embed_pure_input, validate_sdi
from .definetti import (
    approx_reduced_general,
    approx_reduced_symmetric,
    mc_approx_reduced,
)
from .linalg import DEFAULT_DIM_CAP, DenseOperator, ket, partial_trace
from .metrics import (
    BOUND_SLACK,
    general_bound,
    helstrom_perr,
    lemma1_bound,
    perr_lower_bound,
    single_user_fidelities,
    trace_distance,
    universal_clone_gap,
)
from .symspace import HaarSampler, haar_sample, sym_dim, symmetrizer

SCHEMA_VERSION = 1
CHECKS = ("lemma1", "theorem2", "perr", "fidelity_gap", "mc_crosscheck")
MC_SIGMA_THRESHOLD = 5.0


class SchemaError(ValueError):
    """Invalid scenario config; the message carries the offending field path."""


@dataclass(frozen=True)
class ScenarioConfig:
    channel: SDIChannelSpec
    input_state: dict
    k_list: tuple[int, ...]
    checks: tuple[str, ...]
    mc: dict | None = None
    output: dict | None = None  # {"format": csv|json, "path": str}
    label: str | None = None


@dataclass
class ResultRecord:
    """One row of output: parameters, measured quantities, pass flags.

    Empty fields stay None; satisfied_* is None when the check did not run.
    For MC moment rows actual_distance is the worst componentwise deviation
    in standard-error units and bound_exact the flag threshold, keeping the
    rule `satisfied iff actual <= bound + slack` uniform across rows.
    """

    d: int
    N: int | None
    M: int
    k: int
    p: float | None
    seed: int | None
    actual_distance: float | None = None
    bound_exact: float | None = None
    bound_asymptotic: float | None = None
    p_err: float | None = None
    p_err_bound: float | None = None
    F_clon: float | None = None
    F_tilde: float | None = None
    gap_formula: float | None = None
    satisfied_lemma1: bool | None = None
    satisfied_theorem2: bool | None = None
    satisfied_perr: bool | None = None
    satisfied_fidelity_gap: bool | None = None
    satisfied_mc: bool | None = None
    wall_time_ms: float | None = None

    def to_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}

    @classmethod
    def from_dict(cls, data: dict) -> "ResultRecord":
        names = {f.name for f in fields(cls)}
        unknown = set(data) - names
        if unknown:
            raise ValueError(f"unknown record fields {sorted(unknown)}")
        missing = names - set(data)
        if missing:
            raise ValueError(f"missing record fields {sorted(missing)}")
        return cls(**data)


RECORD_COLUMNS = tuple(f.name for f in fields(ResultRecord))


# -- config parsing ----------------------------------------------------------


def _require(cond: bool, path: str, msg: str) -> None:
    if not cond:
        raise SchemaError(f"{path}: {msg}")


def _parse_input_state(data, path: str, d: int) -> dict:
    _require(isinstance(data, dict), path, "expected an object")
    kind = data.get("type")
    _require(kind in ("pure", "diag", "random_pure"), f"{path}.type",
             f"expected pure, diag or random_pure, got {kind!r}")
    if kind == "pure":
        coeffs = data.get("coeffs")
        _require(isinstance(coeffs, list) and len(coeffs) == d, f"{path}.coeffs",
                 f"expected {d} [re, im] pairs")
        try:
            vec = np.array([complex(re, im) for re, im in coeffs])
        except (TypeError, ValueError):
            raise SchemaError(f"{path}.coeffs: expected [re, im] pairs") from None
        _require(abs(float(np.linalg.norm(vec)) - 1.0) <= 1e-9, f"{path}.coeffs",
                 "ket must be normalized within 1e-9")
        return {"type": "pure", "vec": vec}
    if kind == "diag":
        probs = data.get("probs")
        _require(isinstance(probs, list) and len(probs) == d, f"{path}.probs",
                 f"expected {d} probabilities")
        arr = np.array([float(x) for x in probs])
        _require(bool(np.all(arr >= -1e-12)), f"{path}.probs",
                 "probabilities must be non-negative")
        _require(abs(float(arr.sum()) - 1.0) <= 1e-9, f"{path}.probs",
                 "probabilities must sum to 1 within 1e-9")
        return {"type": "diag", "probs": arr}
    seed = data.get("seed")
    _require(isinstance(seed, int) and seed >= 0, f"{path}.seed",
             "expected a non-negative integer seed")
    return {"type": "random_pure", "seed": seed}


def scenario_from_dict(data: dict, where: str = "scenario") -> ScenarioConfig:
    _require(isinstance(data, dict), where, "expected an object")
    _require(data.get("schema") == SCHEMA_VERSION, f"{where}.schema",
             f"expected {SCHEMA_VERSION}")
    try:
        spec = SDIChannelSpec.from_json(data.get("channel"))
    except (KeyError, TypeError, ValueError) as exc:
        raise SchemaError(f"{where}.channel: {exc}") from exc
    parsed_input = _parse_input_state(data.get("input"), f"{where}.input", spec.d)
    if spec.kind in ("universal_cloner", "noisy_cloner"):
        _require(parsed_input["type"] != "diag", f"{where}.input.type",
                 f"{spec.kind} takes a pure input ket")
    k_raw = data.get("k")
    _require(isinstance(k_raw, list) and k_raw, f"{where}.k",
             "expected a non-empty list of integers")
    k_list = []
    for i, k in enumerate(k_raw):
        _require(isinstance(k, int) and 1 <= k <= spec.M, f"{where}.k[{i}]",
                 f"expected an integer in 1..{spec.M}")
        k_list.append(k)
    _require(len(set(k_list)) == len(k_list), f"{where}.k", "duplicate entries")
    checks_raw = data.get("checks")
    _require(isinstance(checks_raw, list) and checks_raw, f"{where}.checks",
             "expected a non-empty list")
    for i, c in enumerate(checks_raw):
        _require(c in CHECKS, f"{where}.checks[{i}]",
                 f"unknown check {c!r}; expected one of {list(CHECKS)}")
    checks = tuple(dict.fromkeys(checks_raw))
    _require(not ("lemma1" in checks and "theorem2" in checks), f"{where}.checks",
             "lemma1 and theorem2 are mutually exclusive; run two scenarios")
    for c in ("perr", "fidelity_gap", "mc_crosscheck"):
        if c in checks:
            _require(1 in k_list, f"{where}.checks",
                     f"{c} is a single-user check; k must include 1")
    if "perr" in checks or "fidelity_gap" in checks:
        _require("lemma1" in checks, f"{where}.checks",
                 "perr/fidelity_gap ride on the lemma1 route; add lemma1")
    if "fidelity_gap" in checks:
        _require(spec.kind == "universal_cloner", f"{where}.checks",
                 "fidelity_gap applies to the universal cloner only")
    mc = data.get("mc")
    if "mc_crosscheck" in checks:
        _require(isinstance(mc, dict), f"{where}.mc",
                 "mc_crosscheck requires an mc object")
        samples = mc.get("samples")
        seed = mc.get("seed")
        _require(isinstance(samples, int) and samples >= 2, f"{where}.mc.samples",
                 "expected an integer >= 2")
        _require(isinstance(seed, int) and seed >= 0, f"{where}.mc.seed",
                 "expected a non-negative integer")
        mc = {"samples": samples, "seed": seed}
    else:
        mc = None
    output = data.get("output")
    if output is not None:
        _require(isinstance(output, dict), f"{where}.output", "expected an object")
        fmt = output.get("format", "csv")
        _require(fmt in ("csv", "json"), f"{where}.output.format",
                 f"expected csv or json, got {fmt!r}")
        path = output.get("path")
        _require(path is None or isinstance(path, str), f"{where}.output.path",
                 "expected a string path")
        output = {"format": fmt, "path": path}
    label = data.get("label")
    if label is not None:
        _require(isinstance(label, str), f"{where}.label", "expected a string")
    return ScenarioConfig(
        channel=spec,
        input_state=parsed_input,
        k_list=tuple(k_list),
        checks=checks,
        mc=mc,
        output=output,
        label=label,
    )


def load_scenarios(text: str) -> list[ScenarioConfig]:
    """Parse a scenario file: one scenario object or a list of them."""
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"scenario file is not valid JSON: {exc}") from exc
    if isinstance(data, list):
        return [scenario_from_dict(d, where=f"scenario[{i}]")
                for i, d in enumerate(data)]
    return [scenario_from_dict(data)]


# -- running -----------------------------------------------------------------


def _input_density(cfg: ScenarioConfig, ch) -> tuple[DenseOperator, int | None]:
    info = cfg.input_state
    if info["type"] == "pure":
        return embed_pure_input(ch, ket(info["vec"])), None
    if info["type"] == "random_pure":
        phi = haar_sample(HaarSampler(cfg.channel.d, info["seed"]))
        return embed_pure_input(ch, phi), info["seed"]
    return DenseOperator(np.diag(info["probs"]), (cfg.channel.d,)), None


def _input_ket(cfg: ScenarioConfig) -> DenseOperator:
    info = cfg.input_state
    if info["type"] == "pure":
        return ket(info["vec"])
    return haar_sample(HaarSampler(cfg.channel.d, info["seed"]))


def run_scenario(cfg: ScenarioConfig,
                 cap: int = DEFAULT_DIM_CAP) -> list[ResultRecord]:
    """Execute a scenario; one record per k, in k_list order."""
    start = time.perf_counter()
    spec = cfg.channel
    ch = spec.build(cap=cap)
    report = validate_sdi(ch)
    if not report.passed:
        raise ValueError(
            f"channel failed permutation invariance "
            f"(residual {report.max_permutation_residual:.3e})"
        )
    if "lemma1" in cfg.checks and not report.symmetric_support:
        raise SchemaError(
            "scenario.checks: lemma1 requires a symmetric-support channel "
            f"(support residual {report.support_residual:.3e}); use theorem2"
        )
    rho_in, input_seed = _input_density(cfg, ch)
    rho_out = apply(ch, rho_in)
    seed = cfg.mc["seed"] if cfg.mc else input_seed
    records = []
    for k in cfg.k_list:
        rho_k = partial_trace(rho_out, range(k))
        row = ResultRecord(d=spec.d, N=spec.N, M=spec.M, k=k, p=spec.p, seed=seed)
        tilde_1 = None
        if "lemma1" in cfg.checks:
            red = approx_reduced_symmetric(rho_out, k, cap=cap)
            dist = trace_distance(rho_k, red.tilde_rho_k)
            row.actual_distance = dist
            row.bound_exact = lemma1_bound(spec.d, spec.M, k)
            row.bound_asymptotic = lemma1_bound(spec.d, spec.M, k, asymptotic=True)
            row.satisfied_lemma1 = dist <= row.bound_exact + BOUND_SLACK
            if k == 1:
                tilde_1 = red.tilde_rho_k
        elif "theorem2" in cfg.checks:
            red = approx_reduced_general(rho_out, k, cap=cap)
            dist = trace_distance(rho_k, red.tilde_rho_k)
            row.actual_distance = dist
            row.bound_exact = general_bound(spec.d, spec.M, k)
            row.bound_asymptotic = general_bound(spec.d, spec.M, k, asymptotic=True)
            row.satisfied_theorem2 = dist <= row.bound_exact + BOUND_SLACK
            if k == 1:
                tilde_1 = red.tilde_rho_k
        if k != 1:
            records.append(row)
            continue
        if "perr" in cfg.checks:
            row.p_err = helstrom_perr(rho_k, tilde_1)
            row.p_err_bound = perr_lower_bound(spec.d, spec.M)
            row.satisfied_perr = row.p_err >= row.p_err_bound - BOUND_SLACK
        if "fidelity_gap" in cfg.checks:
            f_clon, f_tilde = single_user_fidelities(
                ch, _input_ket(cfg), report=report, cap=cap)
            row.F_clon = f_clon
            row.F_tilde = f_tilde
            row.gap_formula = universal_clone_gap(spec.N, spec.M, spec.d)
            diff = f_clon - f_tilde
            row.satisfied_fidelity_gap = (
                diff >= -BOUND_SLACK
                and diff <= row.actual_distance + BOUND_SLACK
                and row.actual_distance <= row.bound_exact + BOUND_SLACK
            )
        if "mc_crosscheck" in cfg.checks:
            est = mc_approx_reduced(rho_out, 1, cfg.mc["samples"], cfg.mc["seed"])
            # The sampler estimates the symmetric-route reduction, so that is
            # the only reference its stderr applies to; under theorem2 (or no
            # bound check at all) tilde_1 is not that state.
            if "lemma1" in cfg.checks:
                ref = tilde_1
            else:
                ref = approx_reduced_symmetric(rho_out, 1, cap=cap).tilde_rho_k
            row.satisfied_mc = _max_sigma(
                est.tilde_rho_k.entries, ref.entries, est.stderr
            ) <= MC_SIGMA_THRESHOLD
        records.append(row)
    elapsed_ms = (time.perf_counter() - start) * 1e3
    for row in records:
        row.wall_time_ms = elapsed_ms
    return records


def _max_sigma(estimate: np.ndarray, reference: np.ndarray,
               stderr: np.ndarray) -> float:
    dev = np.abs(estimate - reference)
    with np.errstate(divide="ignore", invalid="ignore"):
        sig = np.where(dev == 0.0, 0.0, dev / stderr)
    return float(np.max(sig))


def moment_check_record(d: int, n: int, samples: int, seed: int,
                        threshold: float = MC_SIGMA_THRESHOLD) -> ResultRecord:
    """Haar-moment identity as a record: the sampled n-copy mixture of the
    maximally mixed symmetric state must reproduce the symmetrizer / s_n."""
    start = time.perf_counter()
    pi = symmetrizer(d, n)
    rho = (1.0 / sym_dim(d, n)) * pi
    est = mc_approx_reduced(rho, n, samples, seed)
    sigma = _max_sigma(est.tilde_rho_k.entries,
                       pi.entries / sym_dim(d, n), est.stderr)
    return ResultRecord(
        d=d, N=None, M=n, k=n, p=None, seed=seed,
        actual_distance=sigma,
        bound_exact=threshold,
        satisfied_mc=sigma <= threshold + BOUND_SLACK,
        wall_time_ms=(time.perf_counter() - start) * 1e3,
    )


# -- emission ----------------------------------------------------------------


def _format_cell(value, timings: bool, name: str) -> str:
    if name == "wall_time_ms" and not timings:
        return ""
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    return format(float(value), ".12g")


def records_to_csv(records: Sequence[ResultRecord], timings: bool = False) -> str:
    if not records:
        raise ValueError("no records to emit")
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(RECORD_COLUMNS)
    for rec in records:
        row = rec.to_dict()
        writer.writerow([_format_cell(row[c], timings, c) for c in RECORD_COLUMNS])
    return buf.getvalue()


def records_to_json(records: Sequence[ResultRecord], timings: bool = False) -> str:
    if not records:
        raise ValueError("no records to emit")
    out = []
    for rec in records:
        row = rec.to_dict()
        if not timings:
            row["wall_time_ms"] = None
        out.append(row)
    return json.dumps(out, indent=2) + "\n"


def records_from_json(text: str) -> list[ResultRecord]:
    data = json.loads(text)
    if not isinstance(data, list):
        raise ValueError("expected a JSON array of records")
    return [ResultRecord.from_dict(d) for d in data]


def emit(records: Sequence[ResultRecord], fmt: str = "csv",
         path: str | None = None, timings: bool = False) -> str:
    """Render records; when `path` is given, also write them there."""
    if fmt == "csv":
        text = records_to_csv(records, timings=timings)
    elif fmt == "json":
        text = records_to_json(records, timings=timings)
    else:
        raise ValueError(f"unknown output format {fmt!r}; expected csv or json")
    if path is not None and path != "-":
        with open(path, "w") as fh:
            fh.write(text)
    return text


def all_satisfied(records: Sequence[ResultRecord]) -> bool:
    flags = ("satisfied_lemma1", "satisfied_theorem2", "satisfied_perr",
             "satisfied_fidelity_gap", "satisfied_mc")
    return all(
        getattr(rec, f) is not False
        for rec in records
        for f in flags
    )


# -- bundled suite -----------------------------------------------------------


def _basis_input(d: int) -> dict:
    coeffs = [[0.0, 0.0]] * d
    coeffs[0] = [1.0, 0.0]
    return {"type": "pure", "coeffs": coeffs}


def default_suite(seed: int = 1) -> list[dict]:
    """Scenario dicts covering the bounds, fidelity chain, noise route and MC.

    Everything is seeded off the single argument, so repeat runs are
    byte-identical.
    """
    qubit = _basis_input(2)
    suite: list[dict] = [{
        "schema": 1,
        "label": "ten-user cloner",
        "channel": {"kind": "universal_cloner", "d": 2, "N": 1, "M": 10},
        "input": qubit,
        "k": [1, 2, 3],
        "checks": ["lemma1", "perr", "fidelity_gap"],
    }]
    for n_in in (1, 2):
        for m_users in range(max(n_in, 2), 9):
            suite.append({
                "schema": 1,
                "label": f"cloner sweep N={n_in} M={m_users}",
                "channel": {"kind": "universal_cloner", "d": 2,
                            "N": n_in, "M": m_users},
                "input": qubit,
                "k": [k for k in (1, 2, 3) if k <= m_users],
                "checks": ["lemma1"],
            })
    for m_users in (2, 4, 6, 8):
        suite.append({
            "schema": 1,
            "label": f"fixed prep M={m_users}",
            "channel": {"kind": "fixed_prep", "d": 2, "M": m_users,
                        "prep": [[[[1.0, 0.0], [0.0, 0.0]],
                                  [[0.0, 0.0], [0.0, 0.0]]]]},
            "input": qubit,
            "k": [1, 2],
            "checks": ["lemma1", "perr"],
        })
    for m_users in (2, 3, 4):
        suite.append({
            "schema": 1,
            "label": f"noisy cloner M={m_users}",
            "channel": {"kind": "noisy_cloner", "d": 2, "N": 1,
                        "M": m_users, "p": 0.1},
            "input": qubit,
            "k": [1, 2],
            "checks": ["theorem2"],
        })
    for i, (n_in, m_users, d) in enumerate(
            [(1, 2, 2), (1, 3, 2), (2, 3, 2), (2, 4, 2), (1, 2, 3)]):
        suite.append({
            "schema": 1,
            "label": f"fidelity chain N={n_in} M={m_users} d={d}",
            "channel": {"kind": "universal_cloner", "d": d,
                        "N": n_in, "M": m_users},
            "input": {"type": "random_pure", "seed": seed * 1000 + i},
            "k": [1],
            "checks": ["lemma1", "perr", "fidelity_gap"],
        })
    suite.append({
        "schema": 1,
        "label": "mc crosscheck",
        "channel": {"kind": "fixed_prep", "d": 2, "M": 2,
                    "prep": [[[[1.0, 0.0], [0.0, 0.0]],
                              [[0.0, 0.0], [0.0, 0.0]]]]},
        "input": qubit,
        "k": [1],
        "checks": ["lemma1", "mc_crosscheck"],
        "mc": {"samples": 100000, "seed": seed},
    })
    return suite


def run_suite(seed: int = 1, cap: int = DEFAULT_DIM_CAP) -> list[ResultRecord]:
    records: list[ResultRecord] = []
    for data in default_suite(seed):
        records.extend(run_scenario(scenario_from_dict(data), cap=cap))
    for n in (1, 2, 3, 4):
        records.append(moment_check_record(2, n, samples=100000, seed=seed))
    return records
