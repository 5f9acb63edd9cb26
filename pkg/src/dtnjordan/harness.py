"""Config-driven experiment runner and report emission.

Configs are JSON documents validated against ``schemas/config.schema.json``;
complex numbers are ``[re, im]`` pairs. A run writes ``report.json`` (full
residual data), ``checks.csv`` and ``chains.csv`` (tables) and
``summary.txt`` into the output directory.

Randomized parts of an instance come from ``numpy.random.Generator`` with
the PCG64 bit generator seeded by the config ``seed``: coefficients are
drawn first, then the boundary matrix (see :mod:`dtnjordan.instances`).
Random test vectors used by the checks come from a second PCG64 stream
seeded with ``[seed, 1]``.
"""
from __future__ import annotations

import csv
import io
import json
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path

import jsonschema
import numpy as np

from .assembly import CoefficientSet, FormMatrices, assemble_forms
from .dtn import ORDER_CAP, dtn_derivatives_taylor, dtn_eval
from .errors import (ConfigError, DtnJordanError, ReportFormatError, ResolventViolationError)
from .instances import make_rng, random_boundary_matrix, random_coefficients
from .keldysh import (JordanChain, chain_length_profile, keldysh_chains,
                      make_defective_boundary_operator, pencil_jordan_chains)
from .mesh import DiscreteDomain, build_interval_mesh, build_rectangle_mesh
from .realizations import (BoundaryOperator, DirichletPencil, boundary_operator,
                           dirichlet_pencil, in_resolvent_set, robin_pencil,
                           solve_homogeneous_bvp, solve_inhomogeneous_bvp)
from .verify import (VerificationReport, birman_schwinger_check, derivative_cross_check,
                     dtn_duality_check, dtn_nodal_form_check, dual_form_check,
                     ellipticity_check, formula_identity_check, greens_identity_check,
                     mainlem_identity_check, resolvent_identity_check, round_trip_check,
                     theorem_main_backward, theorem_main_forward)

__all__ = [
    "SCHEMA_VERSION",
    "CHECK_NAMES",
    "DEFAULT_TOLERANCES",
    "ExperimentConfig",
    "Problem",
    "RunResult",
    "load_config",
    "parse_config",
    "bundled_config",
    "build_problem",
    "run_pipeline",
    "run_experiment",
    "write_bundle",
    "load_report",
    "parse_grid",
    "sweep_dtn",
    "spectrum_table",
    "thread_count",
    "bundled_config_names",
    "closed_form_interval_dtn",
    "summary_text",
]

SCHEMA_VERSION = 1
THREADS_ENV = "DTNJORDAN_NUM_THREADS"

CHECK_NAMES = (
    "dual_form_identity",
    "greens_identity",
    "dtn_duality",
    "dtn_nodal_form",
    "resolvent_identity",
    "derivative_cross_validation",
    "ellipticity_certificate",
    "birman_schwinger",
    "chain_extraction",
    "theorem_main_backward",
    "theorem_main_forward",
    "chain_round_trip",
    "mainlem_identities",
    "mainlem_formula",
)

DEFAULT_TOLERANCES = {
    "resolvent": 1e-10,
    "exact": 1e-12,
    "resolvent_identity": 1e-10,
    "derivative": 1e-8,
    "fd": 1e-5,
    "theorem": 1e-8,
    "chain": 1e-8,
    "rank": 1e-10,
    "bijection_rank": 1e-8,
    "ellipticity": 1e-10,
}


def _schema(name: str) -> dict:
    return json.loads(resources.files("dtnjordan").joinpath("schemas", name).read_text())


def _cplx(a) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    return a[..., 0] + 1j * a[..., 1]


def _pair(z) -> list:
    z = complex(z)
    return [z.real, z.imag]


@dataclass(frozen=True)
class ExperimentConfig:
    """Validated experiment description; ``raw`` is the JSON document."""

    raw: dict
    name: str
    lambda0: complex
    snap_lambda0: bool
    chain_order: int
    expect_chain_length: int
    seed: int
    tolerances: dict
    checks: tuple
    contour_nodes: int
    contour_radius_factor: float
    mu_target: float | None
    source: str = "<memory>"

    @property
    def domain(self) -> dict:
        return self.raw["domain"]

    @property
    def coefficients(self) -> dict:
        return self.raw.get("coefficients", {"preset": "laplacian"})

    @property
    def boundary(self) -> dict:
        return self.raw.get("boundary", {"kind": "zero"})

    def with_tolerances(self, **overrides) -> "ExperimentConfig":
        tol = dict(self.tolerances)
        for k, v in overrides.items():
            if v is not None:
                if k not in DEFAULT_TOLERANCES:
                    raise ConfigError(f"unknown tolerance {k!r}")
                tol[k] = float(v)
        return replace(self, tolerances=tol)

    def with_checks(self, checks) -> "ExperimentConfig":
        unknown = [c for c in checks if c not in CHECK_NAMES]
        if unknown:
            raise ConfigError(f"unknown check(s) {unknown}; known: {list(CHECK_NAMES)}")
        return replace(self, checks=tuple(checks))


def _locate(text: str, path) -> int:
    """Line number of the JSON key sequence ``path`` (best effort, 1-based)."""
    pos = 0
    for key in path:
        if isinstance(key, str):
            hit = text.find(json.dumps(key), pos)
            if hit >= 0:
                pos = hit
    return text.count("\n", 0, pos) + 1


def _most_specific(err):
    # inside a oneOf, skip branches whose discriminator (a const) did not match
    while err is not None and err.context:
        rejected = {e.schema_path[0] for e in err.context if e.validator == "const"}
        subs = [e for e in err.context if e.schema_path[0] not in rejected]
        if not subs:
            break
        err = jsonschema.exceptions.best_match(subs)
    return err


def parse_config(text: str, source: str = "<memory>") -> ExperimentConfig:
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{source}:{exc.lineno}:{exc.colno}: invalid JSON: {exc.msg}") from exc
    validator = jsonschema.Draft202012Validator(_schema("config.schema.json"))
    errors = list(validator.iter_errors(raw))
    err = _most_specific(max(errors, key=jsonschema.exceptions.relevance)) if errors else None
    if err is not None:
        line = _locate(text, err.absolute_path)
        where = "/".join(map(str, err.absolute_path)) or "<root>"
        snippet = text.splitlines()[line - 1].strip() if text.strip() else ""
        raise ConfigError(f"{source}:{line}: at {where}: {err.message}\n    {snippet}")
    tol = dict(DEFAULT_TOLERANCES)
    tol.update(raw.get("tolerances", {}))
    checks = tuple(raw.get("checks", CHECK_NAMES))
    contour = raw.get("contour", {})
    return ExperimentConfig(
        raw=raw,
        name=raw.get("name", Path(source).stem),
        lambda0=complex(*raw["lambda0"]),
        snap_lambda0=bool(raw.get("snap_lambda0", False)),
        chain_order=int(raw.get("chain_order", 4)),
        expect_chain_length=int(raw.get("expect_chain_length", 0)),
        seed=int(raw.get("seed", 0)),
        tolerances=tol,
        checks=checks,
        contour_nodes=int(contour.get("nodes", 64)),
        contour_radius_factor=float(contour.get("radius_factor", 0.5)),
        mu_target=raw.get("ellipticity", {}).get("mu_target"),
        source=source,
    )


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config(text, str(path))


def bundled_config(name: str) -> ExperimentConfig:
    """One of the configs shipped in ``dtnjordan/configs`` (``.json`` optional)."""
    fname = name if name.endswith(".json") else name + ".json"
    res = resources.files("dtnjordan").joinpath("configs", fname)
    if not res.is_file():
        raise ConfigError(f"no bundled config named {name!r}")
    return parse_config(res.read_text(), fname)


def bundled_config_names() -> list[str]:
    return sorted(p.name for p in resources.files("dtnjordan").joinpath("configs").iterdir()
                  if p.name.endswith(".json"))


# instance construction

@dataclass(frozen=True, eq=False)
class Problem:
    config: ExperimentConfig
    domain: DiscreteDomain
    coeffs: CoefficientSet
    forms: FormMatrices
    pencil: DirichletPencil
    B: BoundaryOperator | None
    rng: np.random.Generator


def _build_domain(spec: dict) -> DiscreteDomain:
    if spec["kind"] == "interval":
        return build_interval_mesh(spec["n"], spec.get("length", 1.0))
    return build_rectangle_mesh(spec["nx"], spec["ny"], spec.get("width", 1.0),
                                spec.get("height", 1.0))


def _build_coefficients(spec: dict, domain: DiscreteDomain, rng) -> CoefficientSet:
    preset = spec["preset"]
    d, ne = domain.dimension, domain.n_elements
    if preset == "laplacian":
        return CoefficientSet.laplacian(domain)
    if preset == "schroedinger_complex":
        return CoefficientSet.schroedinger_complex(domain, complex(*spec["c0"]))
    if preset == "anisotropic":
        return CoefficientSet.uniform(domain, c_principal=_cplx(spec["c_matrix"]),
                                      c_zero=complex(*spec.get("c0", [0.0, 0.0])))
    if preset == "uniform":
        get = lambda k, default: _cplx(spec[k]) if k in spec else default
        return CoefficientSet.uniform(domain, c_principal=get("c_principal", None),
                                      b_conv=get("b_conv", None), c_conv=get("c_conv", None),
                                      c_zero=get("c0", 0.0), mu=spec.get("mu"))
    if preset == "explicit":
        try:
            cp = np.reshape(_cplx(spec["c_principal"]), (ne, d, d))
            b = np.reshape(_cplx(spec["b_conv"]), (ne, d)) if "b_conv" in spec \
                else np.zeros((ne, d), complex)
            c = np.reshape(_cplx(spec["c_conv"]), (ne, d)) if "c_conv" in spec \
                else np.zeros((ne, d), complex)
            c0 = np.reshape(_cplx(spec["c_zero"]), (ne,)) if "c_zero" in spec \
                else np.zeros(ne, complex)
        except ValueError as exc:
            raise ConfigError(f"explicit coefficient arrays do not fit {ne} elements "
                              f"in dimension {d}: {exc}") from exc
        coeffs = CoefficientSet(cp, b, c, c0, 0.0)
        return replace(coeffs, mu=spec.get("mu", coeffs.principal_coercivity()))
    # random_complex
    return random_coefficients(rng, domain, spec.get("convection", 0.5))


def _build_boundary(spec: dict, forms: FormMatrices, pencil: DirichletPencil, lambda0, rng):
    kind = spec["kind"]
    nb = forms.n_boundary
    if kind == "zero":
        return boundary_operator(forms)
    if kind == "matrix":
        return boundary_operator(forms, _cplx(spec["matrix"]), spec.get("coordinates", "nodal"))
    if kind == "random":
        return boundary_operator(forms, random_boundary_matrix(rng, nb, spec.get("scale", 1.0)),
                                 spec.get("coordinates", "nodal"))
    seed_vec = _cplx(spec["seed_vector"]) if "seed_vector" in spec else np.ones(nb, complex)
    return make_defective_boundary_operator(forms, pencil, lambda0, seed_vec)


def build_problem(config: ExperimentConfig, with_boundary: bool = True) -> Problem:
    """Mesh, forms, Dirichlet pencil and boundary operator of a config.

    Raises the library errors of the individual steps; the resolvent
    condition at ``lambda0`` is only enforced by the defective construction.
    """
    rng = make_rng(config.seed)
    domain = _build_domain(config.domain)
    coeffs = _build_coefficients(config.coefficients, domain, rng)
    forms = assemble_forms(domain, coeffs)
    pencil = dirichlet_pencil(forms, config.tolerances["resolvent"])
    B = _build_boundary(config.boundary, forms, pencil, config.lambda0, rng) \
        if with_boundary else None
    return Problem(config, domain, coeffs, forms, pencil, B, rng)


# pipeline

@dataclass
class RunResult:
    config: ExperimentConfig
    lambda0: complex
    reports: list
    chains: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.reports)

    @property
    def exit_code(self) -> int:
        return 0 if self.passed else 1

    def report_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "name": self.config.name,
            "passed": self.passed,
            "lambda0": _pair(self.lambda0),
            "tolerances": dict(sorted(self.config.tolerances.items())),
            "checks": list(self.config.checks),
            "chains": self.chains,
            "reports": [r.to_dict() for r in self.reports],
            "config": self.config.raw,
        }


def _error_report(name: str, exc: Exception) -> VerificationReport:
    return VerificationReport(name, {"error": 1.0}, {"error": 0.0},
                              {"error_type": type(exc).__name__, "message": str(exc)})


def _missing_chain_report(name: str) -> VerificationReport:
    return VerificationReport(name, {"chain_missing": 1.0}, {"chain_missing": 0.0},
                              {"message": "no chain at lambda0"})


def _chain_rows(kind, chains, forms):
    rows = []
    for i, ch in enumerate(chains):
        for level, (v, r) in enumerate(zip(ch.vectors, ch.residuals)):
            tr = forms.trace_selector @ v if v.shape[0] == forms.n else v
            rows.append([kind, i, level, float(r), float(np.linalg.norm(v)),
                         float(np.linalg.norm(tr))])
    return rows


def run_pipeline(config: ExperimentConfig) -> RunResult:
    """Mesh, assembly, pencils, DtN derivatives, chains and every enabled check."""
    problem = build_problem(config, with_boundary=False)
    forms, pencil = problem.forms, problem.pencil
    tol = config.tolerances
    lam0 = config.lambda0

    try:
        B = _build_boundary(config.boundary, forms, pencil, lam0, problem.rng)
    except ResolventViolationError as exc:
        return _violation(config, lam0, exc)
    robin = robin_pencil(forms, B)
    if config.snap_lambda0:
        lam0 = complex(robin.spectrum[np.argmin(np.abs(robin.spectrum - lam0))])
    ok, margin = in_resolvent_set(pencil, lam0)
    if not ok:
        return _violation(config, lam0, ResolventViolationError(lam0, margin, pencil.tol_resolvent))

    enabled = set(config.checks)
    reports: list[VerificationReport] = []
    test_rng = make_rng([config.seed, 1])
    nb, n = forms.n_boundary, forms.n
    dist = pencil.distance_to_spectrum(lam0)

    def run(name, fn):
        if name not in enabled:
            return None
        try:
            rep = fn()
        except DtnJordanError as exc:
            rep = _error_report(name, exc)
        reports.append(rep)
        return rep

    def greens():
        phi_f = test_rng.standard_normal(nb) + 1j * test_rng.standard_normal(nb)
        h = test_rng.standard_normal(n) + 1j * test_rng.standard_normal(n)
        phi_g = test_rng.standard_normal(nb) + 1j * test_rng.standard_normal(nb)
        f = solve_inhomogeneous_bvp(forms, pencil, lam0, phi_f, h)
        g = solve_homogeneous_bvp(forms, pencil, np.conj(lam0), phi_g, which="dual")
        return greens_identity_check(forms, f, h, lam0, g, None, np.conj(lam0), tol["exact"])

    shift = 0.25 * dist * np.exp(0.25j * np.pi)
    run("dual_form_identity",
        lambda: dual_form_check(forms, assemble_forms(problem.domain, problem.coeffs.dual()),
                                tol["exact"]))
    run("greens_identity", greens)
    run("dtn_duality", lambda: dtn_duality_check(forms, pencil, [lam0, lam0 + shift], tol["exact"]))
    run("dtn_nodal_form", lambda: dtn_nodal_form_check(forms, pencil, lam0, seed=config.seed,
                                                        tol=tol["exact"]))
    run("resolvent_identity",
        lambda: resolvent_identity_check(forms, pencil, lam0 + shift, lam0, seed=config.seed,
                                         tol=tol["resolvent_identity"]))
    run("derivative_cross_validation",
        lambda: derivative_cross_check(forms, pencil, lam0, min(4, ORDER_CAP),
                                       nodes=config.contour_nodes, tol=tol["derivative"],
                                       tol_fd=tol["fd"],
                                       radius_factor=config.contour_radius_factor))
    run("ellipticity_certificate",
        lambda: ellipticity_check(forms, B, config.mu_target, tol["ellipticity"]))
    run("birman_schwinger",
        lambda: birman_schwinger_check(forms, pencil, B, lam0, tol["bijection_rank"],
                                       tol["theorem"]))

    L = config.chain_order
    derivs = dtn_derivatives_taylor(forms, pencil, lam0, min(L + 1, ORDER_CAP))
    D0 = derivs.matrices[0]
    k_rank = tol["rank"] * (np.linalg.norm(D0, 2) + np.linalg.norm(B.b_dual, 2))
    kchains = keldysh_chains(derivs, B, L, k_rank, tol["chain"])
    p_rank = tol["rank"] * (np.linalg.norm(robin.K_B, 2) + abs(lam0) * np.linalg.norm(forms.mass, 2))
    pchains = pencil_jordan_chains(robin.K_B, forms.mass, lam0, L, p_rank, tol["chain"])
    k_len = sorted((len(c) for c in kchains), reverse=True)
    p_len = sorted((len(c) for c in pchains), reverse=True)

    def extraction():
        longest = k_len[0] if k_len else 0
        res = {
            "length_shortfall": float(max(0, config.expect_chain_length - longest)),
            "profile_mismatch": float(sum(abs(a - b) for a, b in
                                          zip(chain_length_profile(k_len, L),
                                              chain_length_profile(p_len, L)))),
            "keldysh_residual": max((max(c.residuals) for c in kchains), default=0.0),
            "pencil_residual": max((max(c.residuals) for c in pchains), default=0.0),
        }
        tols = {"length_shortfall": 0.0, "profile_mismatch": 0.0,
                "keldysh_residual": tol["chain"], "pencil_residual": tol["chain"]}
        return VerificationReport("chain_extraction", res, tols,
                                  {"lambda0": _pair(lam0), "keldysh_lengths": k_len,
                                   "pencil_lengths": p_len, "resolvent_margin": margin})

    run("chain_extraction", extraction)

    kbest = max(kchains, key=len) if kchains else None
    pbest = max(pchains, key=len) if pchains else None
    rebuilt: list[JordanChain] = []

    def backward():
        if kbest is None:
            return _missing_chain_report("theorem_main_backward")
        chain, rep = theorem_main_backward(forms, pencil, B, kbest, tol["theorem"])
        rebuilt.append(chain)
        return rep

    def forward():
        if pbest is None:
            return _missing_chain_report("theorem_main_forward")
        return theorem_main_forward(forms, pencil, B, pbest, derivs, tol["theorem"])

    def round_trip():
        if kbest is None:
            return _missing_chain_report("chain_round_trip")
        chain = rebuilt[0] if rebuilt else theorem_main_backward(forms, pencil, B, kbest,
                                                                 tol["theorem"])[0]
        fwd = theorem_main_forward(forms, pencil, B, chain, derivs, tol["theorem"])
        rt = round_trip_check(kbest, fwd)
        res = {**rt.residuals, **{f"forward_{k}": v for k, v in fwd.residuals.items()}}
        tols = {**rt.tolerances, **{f"forward_{k}": v for k, v in fwd.tolerances.items()}}
        return VerificationReport("chain_round_trip", res, tols,
                                  {"lambda0": _pair(lam0), "chain_length": len(chain)})

    def mainlem():
        if pbest is None:
            return _missing_chain_report("mainlem_identities")
        return mainlem_identity_check(forms, pencil, B, pbest, derivs, tol=tol["theorem"])

    def formula():
        if pbest is None:
            return _missing_chain_report("mainlem_formula")
        lams = [lam0 + 0.1 * dist * np.exp(1j * t) for t in (0.3, 2.1)]
        return formula_identity_check(forms, pencil, pbest, derivs, lams, tol=tol["theorem"])

    run("theorem_main_backward", backward)
    run("theorem_main_forward", forward)
    run("chain_round_trip", round_trip)
    run("mainlem_identities", mainlem)
    run("mainlem_formula", formula)

    chains = {
        "keldysh_lengths": k_len,
        "pencil_lengths": p_len,
        "rows": (_chain_rows("keldysh", kchains, forms) + _chain_rows("pencil", pchains, forms)
                 + _chain_rows("reconstructed", rebuilt, forms)),
    }
    return RunResult(config, lam0, reports, chains)


def _violation(config, lam0, exc: ResolventViolationError) -> RunResult:
    rep = VerificationReport(
        "resolvent-violation",
        {"resolvent_margin_deficit": max(exc.threshold - exc.margin, 0.0) + 1.0},
        {"resolvent_margin_deficit": 0.0},
        {"lambda0": _pair(lam0), "margin": exc.margin, "threshold": exc.threshold,
         "message": str(exc)})
    return RunResult(config, lam0, [rep], {"keldysh_lengths": [], "pencil_lengths": [], "rows": []})


# output

def _dump_json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, allow_nan=True) + "\n"


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([repr(x) if isinstance(x, float) else x for x in row])
    return buf.getvalue()


def _ratio(value, tol):
    if tol > 0:
        return value / tol
    return np.inf if value > 0 else -1.0


def summary_text(result: RunResult) -> str:
    lines = [f"experiment {result.config.name}",
             f"lambda0 = {result.lambda0.real!r} + {result.lambda0.imag!r}i"]
    if result.chains.get("keldysh_lengths") or result.chains.get("pencil_lengths"):
        lines.append(f"keldysh chain lengths {result.chains['keldysh_lengths']}, "
                     f"pencil chain lengths {result.chains['pencil_lengths']}")
    for r in result.reports:
        worst = max(r.residuals, key=lambda k: _ratio(r.residuals[k], r.tolerances[k]),
                    default=None)
        detail = "" if worst is None else \
            f"  worst {worst} = {r.residuals[worst]:.3e} (tol {r.tolerances[worst]:.1e})"
        lines.append(f"{'PASS' if r.passed else 'FAIL'} {r.name}{detail}")
        if "message" in r.context:
            lines.append(f"     {r.context['message']}")
    n_fail = sum(not r.passed for r in result.reports)
    lines.append(f"{len(result.reports) - n_fail}/{len(result.reports)} checks passed")
    return "\n".join(lines) + "\n"


def write_bundle(result: RunResult, out_dir) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    report = result.report_dict()
    rows = report["chains"].pop("rows")
    jsonschema.validate(report, _schema("report.schema.json"))
    (out / "report.json").write_text(_dump_json(report))
    check_rows = [[r.name, k, float(v), float(r.tolerances[k]), v <= r.tolerances[k]]
                  for r in result.reports for k, v in r.residuals.items()]
    (out / "checks.csv").write_text(
        _csv_text(["check", "residual", "value", "tolerance", "passed"], check_rows))
    (out / "chains.csv").write_text(
        _csv_text(["kind", "chain", "level", "residual", "vector_norm", "trace_norm"], rows))
    (out / "summary.txt").write_text(summary_text(result))
    return out


def run_experiment(config_path, out_dir="out", tolerances: dict | None = None,
                   only=None) -> RunResult:
    """Load a config, run the pipeline and write the report bundle.

    ``only`` restricts the checks to the given names. The returned result's
    ``exit_code`` is 0 iff every enabled check passed.
    """
    config = config_path if isinstance(config_path, ExperimentConfig) else load_config(config_path)
    if tolerances:
        config = config.with_tolerances(**tolerances)
    if only:
        config = config.with_checks([only] if isinstance(only, str) else only)
    result = run_pipeline(config)
    write_bundle(result, out_dir)
    return result


def load_report(path) -> dict:
    """Read ``report.json``; unknown schema versions are rejected."""
    try:
        data = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ReportFormatError(f"cannot read report {path}: {exc}") from exc
    version = data.get("schema_version") if isinstance(data, dict) else None
    if version != SCHEMA_VERSION:
        raise ReportFormatError(f"unsupported report schema version {version!r} "
                                f"(this reader understands {SCHEMA_VERSION})")
    try:
        jsonschema.validate(data, _schema("report.schema.json"))
    except jsonschema.ValidationError as exc:
        raise ReportFormatError(f"report does not match its schema: {exc.message}") from exc
    return data


# sweeps and spectra

def thread_count() -> int:
    raw = os.environ.get(THREADS_ENV, "1")
    try:
        return max(1, int(raw))
    except ValueError as exc:
        raise ConfigError(f"{THREADS_ENV} must be an integer, got {raw!r}") from exc


def parse_grid(spec: str) -> tuple[np.ndarray, float]:
    """Parse a spectral grid; returns ``(points, spacing)``.

    ``"a:b:n"`` is ``n`` equispaced real points on ``[a, b]``; ``"a:b:n@y"``
    shifts them by ``y`` i. Otherwise a comma-separated list of Python
    complex literals (``"-1, 2+0.5j"``); spacing is 0 for lists. An empty
    spec is an empty grid.
    """
    spec = spec.strip()
    if not spec:
        return np.zeros(0, complex), 0.0
    try:
        if ":" in spec:
            line, _, im = spec.partition("@")
            a, b, n = line.split(":")
            n = int(n)
            if n < 0:
                raise ValueError("negative point count")
            pts = np.linspace(float(a), float(b), n) + 1j * float(im or 0.0)
            step = abs(float(b) - float(a)) / (n - 1) if n > 1 else 0.0
            return pts.astype(complex), step
        return np.array([complex(t.replace(" ", "")) for t in spec.split(",") if t.strip()],
                        dtype=complex), 0.0
    except ValueError as exc:
        raise ConfigError(f"bad grid spec {spec!r}: {exc}") from exc


def closed_form_interval_dtn(lam, length: float = 1.0) -> np.ndarray:
    """DtN matrix of ``-u''`` on ``(0, length)`` in outward conormal convention."""
    s = np.sqrt(complex(lam))
    if abs(s * length) < 1e-8:
        return np.array([[1, -1], [-1, 1]], dtype=complex) / length
    c = np.cos(s * length)
    return (s / np.sin(s * length)) * np.array([[c, -1], [-1, c]])


def _is_interval_laplacian(config: ExperimentConfig) -> bool:
    return config.domain["kind"] == "interval" and config.coefficients["preset"] == "laplacian"


def sweep_dtn(config: ExperimentConfig, grid_spec: str, out_path, min_distance: float = 1e-3):
    """Evaluate ``D(lam)`` on a grid and write one CSV row per point.

    A row is flagged when the point lies within ``max(min_distance,
    spacing / 2)`` of the Dirichlet spectrum or its resolvent margin is
    below tolerance; entries are left empty only in the latter case.
    Returns the number of flagged rows.
    """
    problem = build_problem(config, with_boundary=False)
    forms, pencil = problem.forms, problem.pencil
    pts, step = parse_grid(grid_spec)
    nb = forms.n_boundary
    closed = _is_interval_laplacian(config)
    length = config.domain.get("length", 1.0)
    header = ["lambda_re", "lambda_im"]
    for i in range(nb):
        for j in range(nb):
            header += [f"D_{i}_{j}_re", f"D_{i}_{j}_im"]
    header += ["dist_dirichlet", "resolvent_margin", "flagged"]
    if closed:
        header.append("closed_form_error")
    threshold = max(min_distance, 0.5 * step)

    def row(lam):
        dist = pencil.distance_to_spectrum(lam)
        ok, margin = in_resolvent_set(pencil, lam)
        flagged = (not ok) or dist < threshold
        out = [float(lam.real), float(lam.imag)]
        if ok:
            D = dtn_eval(forms, pencil, lam)
            for z in D.ravel():
                out += [float(z.real), float(z.imag)]
        else:
            D = None
            out += [""] * (2 * nb * nb)
        out += [float(dist), float(margin), int(flagged)]
        if closed:
            if D is None:
                out.append("")
            else:
                ref = closed_form_interval_dtn(lam, length)
                out.append(float(np.linalg.norm(D - ref) / np.linalg.norm(ref)))
        return out

    with ThreadPoolExecutor(max_workers=thread_count()) as pool:
        rows = list(pool.map(row, pts))
    path = Path(out_path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(_csv_text(header, rows))
    return sum(r[2 + 2 * nb * nb + 2] for r in rows)


def spectrum_table(config: ExperimentConfig, out_path) -> dict:
    """Dirichlet, dual Dirichlet and Robin spectra as one CSV.

    Robin eigenvalues carry their Dirichlet resolvent margin.
    """
    problem = build_problem(config, with_boundary=False)
    forms, pencil = problem.forms, problem.pencil
    try:
        B = _build_boundary(config.boundary, forms, pencil, config.lambda0, problem.rng)
    except ResolventViolationError:
        B = None
    rows = [["dirichlet", i, float(z.real), float(z.imag), ""]
            for i, z in enumerate(pencil.spectrum)]
    rows += [["dirichlet_dual", i, float(z.real), float(z.imag), ""]
             for i, z in enumerate(pencil.spectrum_dual)]
    robin = robin_pencil(forms, B).spectrum if B is not None else np.zeros(0)
    rows += [["robin", i, float(z.real), float(z.imag), pencil.margin(z)]
             for i, z in enumerate(robin) if np.isfinite(z)]
    path = Path(out_path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(_csv_text(["kind", "index", "re", "im", "dirichlet_margin"], rows))
    return {"dirichlet": pencil.spectrum, "robin": robin}
