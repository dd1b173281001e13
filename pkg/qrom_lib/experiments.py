"""
Named experiments, their JSON configs, and the runner.

A config names an experiment, a game selector, an oracle ensemble, an
optional strategy file and experiment parameters. Running it writes a CSV
(every row tagged with the config hash) and a JSON sidecar holding the
full config and the library version, locally or to an S3 result store.
"""

import hashlib
import json
import logging
import os
import tempfile
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Tuple

import pandas as pd

from .adversary import (
    AdviceFamily,
    RegisterLayout,
    StrategyCircuit,
    default_layout,
    identity_strategy,
    load_strategy,
)
from .altmeas import conditional_frame, conditional_probs, sweep_frame
from .bfqrom import (
    AlternatingPrefix,
    BestResponseOnline,
    ClassicalFixingPrefix,
    ConstantOnline,
    EmptyPrefix,
    Online,
    Prefix,
    QuantumOnline,
    build_prefix_from_altmeas,
    classical_fixings,
    estimate_nu,
    run_bf_game,
)
from .bounds import (
    Application,
    Decision,
    General,
    application_bound,
    bound_sweep,
    main_theorem_bound,
    owf_nu,
    prg_nu,
)
from .config import Settings, get_settings, override_settings
from .errors import ConfigError, QromError, VerificationFailed
from .game import GameSpec, YzCode, build_game, load_code, yz_game
from .oracle import OracleEnsemble, enumerate_oracles, sample_oracles
from .s3_io import ResultStore, parse_s3_uri
from .separation import (
    ListRecoveryInstance,
    best_classical_advice,
    build_coverage_instance,
    fixing_regime_check,
    good_set,
    lookup_strategy,
    quantum_vs_classical_report,
)
from .spectral import optimal_advice_family, optimal_nonuniform_value, per_oracle_spectra, spectra_frame
from .suite import micro_suite, verify_lemmas

logger = logging.getLogger(__name__)

ADVICE_KINDS = ("uniform", "optimal", "maximally_mixed")
ENSEMBLE_MODES = ("exhaustive", "sampled")
MONOTONE_TOL = 1e-9


@dataclass
class ExperimentConfig:
    """One experiment run, as read from a JSON config file."""

    experiment: str
    game: str = "owf"
    n: int = 2
    m: int = 2
    ensemble: Dict[str, Any] = field(default_factory=lambda: {"mode": "exhaustive"})
    strategy: Optional[str] = None
    advice: str = "uniform"
    params: Dict[str, Any] = field(default_factory=dict)
    seed: int = 0
    output: Optional[str] = None

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "ExperimentConfig":
        known = set(cls.__dataclass_fields__)
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigError(f"Unknown config fields {unknown}")
        if "experiment" not in data:
            raise ConfigError("Config must name an experiment")
        return cls(**data)

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    def config_hash(self) -> str:
        """First 12 hex digits of the SHA-256 of the sorted-key JSON, output excluded."""
        payload = {k: v for k, v in self.to_dict().items() if k != "output"}
        text = json.dumps(payload, sort_keys=True, default=str)
        return hashlib.sha256(text.encode()).hexdigest()[:12]

    def param(self, name: str, default: Any = None) -> Any:
        if name in self.params:
            return self.params[name]
        experiment = EXPERIMENTS.get(self.experiment)
        if experiment is not None and name in experiment.defaults:
            return experiment.defaults[name]
        return default

    def validate(self) -> Dict[str, Any]:
        """
        Check the config without running anything.

        Returns:
            ``{"is_valid", "errors", "warnings"}``.
        """
        results: Dict[str, Any] = {"is_valid": True, "errors": [], "warnings": []}
        errors, warnings = results["errors"], results["warnings"]

        experiment = EXPERIMENTS.get(self.experiment)
        if experiment is None:
            errors.append(f"Unknown experiment {self.experiment!r}; known: {sorted(EXPERIMENTS)}")
        if self.n < 1 or self.m < 1:
            errors.append(f"Oracle sizes must be positive, got n={self.n}, m={self.m}")
        kind, _, rest = self.game.partition(":")
        if kind not in ("owf", "prg", "salted", "yz"):
            errors.append(f"Unknown game selector {self.game!r}")
        elif kind == "yz" and not Path(rest).is_file():
            errors.append(f"YZ code file {rest!r} does not exist")
        mode = self.ensemble.get("mode", "exhaustive")
        if mode not in ENSEMBLE_MODES:
            errors.append(f"Ensemble mode must be one of {ENSEMBLE_MODES}, got {mode!r}")
        elif mode == "sampled" and int(self.ensemble.get("count", 0)) < 1:
            errors.append("A sampled ensemble needs count >= 1")
        if self.strategy is not None and not Path(self.strategy).is_file():
            errors.append(f"Strategy file {self.strategy!r} does not exist")
        if self.advice not in ADVICE_KINDS:
            errors.append(f"Advice must be one of {ADVICE_KINDS}, got {self.advice!r}")
        if self.seed < 0:
            errors.append("Seed must be non-negative")

        if experiment is not None:
            missing = [p for p in experiment.required if p not in self.params]
            if missing:
                errors.append(f"{self.experiment} needs params {missing}")
            for name, check, message in experiment.checks:
                value = self.param(name)
                if value is not None and not check(value):
                    errors.append(f"{name}={value!r}: {message}")
            expected = set(experiment.required) | set(experiment.defaults) | set(experiment.optional)
            extra = sorted(set(self.params) - expected)
            if extra:
                warnings.append(f"Ignoring params {extra} for {self.experiment}")

        results["is_valid"] = not errors
        return results


def load_config(path: str) -> ExperimentConfig:
    try:
        data = json.loads(Path(path).read_text())
    except (OSError, ValueError) as e:
        raise ConfigError(f"Could not read config {path}: {e}") from e
    return ExperimentConfig.from_dict(data)


def _build_ensemble(cfg: ExperimentConfig, game: GameSpec) -> OracleEnsemble:
    ens = cfg.ensemble
    if ens.get("mode", "exhaustive") == "sampled":
        return sample_oracles(game.oracle_domain, game.oracle_range, int(ens["count"]),
                              int(ens.get("seed", cfg.seed)))
    return enumerate_oracles(game.oracle_domain, game.oracle_range, ens.get("cap"))


@dataclass
class Setup:
    game: GameSpec
    ensemble: OracleEnsemble
    strat: StrategyCircuit
    layout: RegisterLayout
    adv: AdviceFamily


def build_setup(cfg: ExperimentConfig) -> Setup:
    """Game, ensemble, strategy, layout and advice family named by a config."""
    game = build_game(cfg.game, cfg.n, cfg.m)
    ensemble = _build_ensemble(cfg, game)
    layout: Optional[RegisterLayout] = None
    if cfg.strategy:
        strat, layout = load_strategy(cfg.strategy)
    else:
        strat = identity_strategy()
    layout = layout or default_layout(game)
    if cfg.advice == "uniform":
        adv = AdviceFamily.uniform()
    else:
        adv, _ = optimal_advice_family(game, strat, ensemble, layout)
        if cfg.advice == "maximally_mixed":
            adv = AdviceFamily.maximally_mixed(adv)
    logger.info(f"{game.name}: {len(ensemble)} oracles, D={layout.total_dimension}, "
                f"T={strat.query_count}, advice={cfg.advice}")
    return Setup(game, ensemble, strat, layout, adv)


def run_verify_lemmas(cfg: ExperimentConfig) -> pd.DataFrame:
    return verify_lemmas(int(cfg.param("count")), cfg.seed, tuple(cfg.param("advice_qubits")),
                         int(cfg.param("helper_samples")))


def run_altmeas_sweep(cfg: ExperimentConfig) -> pd.DataFrame:
    s = build_setup(cfg)
    return sweep_frame(s.adv, s.strat, s.game, s.ensemble, s.layout, int(cfg.param("k_max")),
                       int(cfg.param("samples")), cfg.seed)


def run_conditional_monotonicity(cfg: ExperimentConfig) -> pd.DataFrame:
    """
    epsilon^(t) per oracle and per ensemble (oracle_index -1) on random instances.

    ``drop`` is epsilon^(t-1) - epsilon^(t), zero at t = 1; a row passes
    when the drop is within MONOTONE_TOL.
    """
    t_max = int(cfg.param("t_max"))
    frames = []
    for inst in micro_suite(int(cfg.param("instances")), cfg.seed):
        spectra = per_oracle_spectra(inst.adv, inst.strat, inst.game, inst.ensemble, inst.layout)
        frame = conditional_frame(spectra, t_max)
        frame.insert(0, "instance", inst.label)
        frames.append(frame)
    out = pd.concat(frames, ignore_index=True)
    out["drop"] = -out.groupby(["instance", "oracle_index"])["epsilon"].diff().fillna(0.0)
    out["passed"] = out["drop"] <= MONOTONE_TOL
    return out


def run_spectra_export(cfg: ExperimentConfig) -> pd.DataFrame:
    """Eigenvalue and advice overlap of every oracle's game POVM."""
    s = build_setup(cfg)
    return spectra_frame(per_oracle_spectra(s.adv, s.strat, s.game, s.ensemble, s.layout))


def run_reduction_equality(cfg: ExperimentConfig) -> pd.DataFrame:
    s = build_setup(cfg)
    ks = [int(k) for k in cfg.param("ks")]
    seq = conditional_probs(per_oracle_spectra(s.adv, s.strat, s.game, s.ensemble, s.layout), max(ks))
    rows = []
    for k in ks:
        result = run_bf_game(build_prefix_from_altmeas(s.adv, s.strat, s.game, s.layout, k),
                             s.game, s.ensemble)
        residual = abs(result.conditional - seq.epsilon(k))
        rows.append({
            "k": k,
            "bf_conditional": result.conditional,
            "epsilon": seq.epsilon(k),
            "accept_rate": result.accept_rate,
            "residual": residual,
            "passed": residual <= 1e-9,
        })
    return pd.DataFrame(rows)


_BOUND_PARAMS = ("s", "t", "n", "m", "k", "nu", "t_samp", "t_verify")


def run_bound_calculator(cfg: ExperimentConfig) -> pd.DataFrame:
    which = cfg.param("which")
    c = float(cfg.param("c"))
    trusted = bool(cfg.param("trusted"))
    if which in ("main-general", "main-decision"):
        formula = cfg.param("nu_formula")
        n, m = int(cfg.param("n", cfg.n)), int(cfg.param("m", cfg.m))
        if formula == "owf":
            def nu_fn(P: float, T: float) -> float:
                return owf_nu(P, T, n, m, c)
        elif formula == "prg":
            def nu_fn(P: float, T: float) -> float:
                return prg_nu(P, T, n, c)
        else:
            raise ConfigError(f"nu_formula must be owf or prg, got {formula!r}")
        mode = General() if which == "main-general" else Decision(
            tuple(cfg.param("gamma_grid", Decision().gamma_grid)), bool(cfg.param("refine"))
        )
        report = main_theorem_bound(nu_fn, int(cfg.param("s")), int(cfg.param("t")),
                                    int(cfg.param("t_samp", 1)), int(cfg.param("t_verify", 1)),
                                    mode, trusted)
    else:
        values = {name: cfg.params[name] for name in _BOUND_PARAMS if name in cfg.params}
        report = application_bound(which, values, c, trusted)
    return pd.DataFrame([report.to_row()])


def run_bound_sweep(cfg: ExperimentConfig) -> pd.DataFrame:
    return bound_sweep(cfg.param("which"), cfg.param("grid"), float(cfg.param("c")))


def run_advice_optimum_curve(cfg: ExperimentConfig) -> pd.DataFrame:
    """Best S-bit classical advice against the best quantum advice over the same lookup table."""
    s = build_setup(cfg)
    cov = build_coverage_instance(s.game, s.ensemble)
    rows = []
    for S in cfg.param("s_values"):
        classical = best_classical_advice(cov, int(S))
        strat, layout = lookup_strategy(cov, classical.chosen, s.game)
        rows.append({
            "S": int(S),
            "classical_value": classical.value,
            "quantum_value": optimal_nonuniform_value(s.game, strat, s.ensemble, layout),
            "maps": len(classical.chosen),
            "method": classical.method,
        })
    return pd.DataFrame(rows)


def run_bfqrom_estimate(cfg: ExperimentConfig) -> pd.DataFrame:
    s = build_setup(cfg)
    P, T = int(cfg.param("p")), int(cfg.param("t"))
    prefixes: List[Prefix] = [EmptyPrefix()]
    prefixes += [ClassicalFixingPrefix(f) for f in classical_fixings(s.game, P) if len(f)]
    rounds = int(cfg.param("alternating_rounds"))
    if rounds:
        prefixes.append(AlternatingPrefix(s.adv, s.strat, s.game, s.layout, rounds))
    onlines: List[Online] = [BestResponseOnline()]
    onlines += [ConstantOnline(a) for a in s.game.answer_space]
    if s.strat.query_count <= T:
        onlines.append(QuantumOnline(s.adv, s.strat, s.layout))
    nu = cfg.param("nu_formula")
    estimate = estimate_nu(s.game, prefixes, onlines, s.ensemble, P, T,
                           None if nu is None else float(nu))
    logger.info(f"Best conditional value at P={P}, T={T}: {estimate.best_conditional:.6g}")
    return estimate.frame


def run_separation_report(cfg: ExperimentConfig) -> pd.DataFrame:
    s = build_setup(cfg)
    rows = [quantum_vs_classical_report(s.game, s.strat, s.ensemble, s.layout, int(S))
            for S in cfg.param("s_values")]
    return pd.DataFrame(rows)


def _code_from(cfg: ExperimentConfig) -> YzCode:
    if "code" in cfg.params:
        return YzCode.from_dict(cfg.params["code"])
    kind, _, rest = cfg.game.partition(":")
    if kind != "yz":
        raise ConfigError("yz-counting needs a yz:<file> game or an inline code param")
    return load_code(rest)


def run_yz_counting(cfg: ExperimentConfig) -> pd.DataFrame:
    """Every fixing of at most P points against the counting bound."""
    code = _code_from(cfg)
    zeta = float(cfg.param("zeta"))
    game = yz_game(code)
    rows = []
    for fixing in classical_fixings(game, int(cfg.param("p"))):
        check = fixing_regime_check(code, fixing, zeta)
        fixed = {x for x, _ in fixing.points}
        lists = tuple(frozenset(c for c in range(code.alphabet_size) if i * code.alphabet_size + c in fixed)
                      for i in range(code.n))
        brute = sum(
            sum(c in lists[i] for i, c in enumerate(w)) >= (1 - zeta) * code.n - 1e-12
            for w in code.codewords
        )
        _, count = good_set(ListRecoveryInstance(code, lists, zeta))
        rows.append({
            "fixing": fixing.describe(),
            "best_value": check.best_value,
            "good_count": check.good_count,
            "bound": check.bound,
            "passed": check.holds and count == brute,
        })
    return pd.DataFrame(rows)


def _positive(v: Any) -> bool:
    return int(v) >= 1


def _non_negative(v: Any) -> bool:
    return int(v) >= 0


@dataclass(frozen=True)
class Experiment:
    name: str
    description: str
    run: Callable[[ExperimentConfig], pd.DataFrame]
    required: Tuple[str, ...] = ()
    defaults: Dict[str, Any] = field(default_factory=dict)
    optional: Tuple[str, ...] = ()
    checks: Tuple[Tuple[str, Callable[[Any], bool], str], ...] = ()


_REGISTRY = [
    Experiment("verify-lemmas", "Exact identity checks on the random micro suite",
               run_verify_lemmas,
               defaults={"count": 20, "advice_qubits": [1, 2, 3], "helper_samples": 1000},
               checks=(("count", _positive, "must be >= 1"),)),
    Experiment("altmeas-sweep", "Alternating-game win probability against k",
               run_altmeas_sweep, defaults={"k_max": 6, "samples": 0},
               checks=(("k_max", _positive, "must be >= 1"),
                       ("samples", _non_negative, "must be >= 0"))),
    Experiment("conditional-monotonicity", "epsilon^(t) non-decreasing on random instances",
               run_conditional_monotonicity, defaults={"instances": 100, "t_max": 8},
               checks=(("instances", _positive, "must be >= 1"),
                       ("t_max", _positive, "must be >= 1"))),
    Experiment("spectra-export", "Per-oracle eigenvalues and advice overlaps of the game POVM",
               run_spectra_export),
    Experiment("reduction-equality", "Bit-fixing conditional value against epsilon^(k) for odd k",
               run_reduction_equality, defaults={"ks": [1, 3, 5]},
               checks=(("ks", lambda ks: all(int(k) >= 1 and int(k) % 2 for k in ks),
                        "every k must be odd and positive"),)),
    Experiment("bound-calculator", "One closed-form security bound",
               run_bound_calculator, required=("which",),
               defaults={"c": 1.0, "trusted": False},
               optional=_BOUND_PARAMS + ("nu_formula", "gamma_grid", "refine"),
               checks=(("which", lambda w: w in {a.value for a in Application}
                        | {"main-general", "main-decision"}, "unknown bound"),)),
    Experiment("bound-sweep", "A bound over a parameter grid",
               run_bound_sweep, required=("which", "grid"), defaults={"c": 1.0},
               checks=(("which", lambda w: w in {a.value for a in Application}, "unknown bound"),
                       ("grid", lambda g: isinstance(g, dict) and bool(g), "must be a non-empty mapping"))),
    Experiment("advice-optimum-curve", "Optimal classical and quantum advice value against S",
               run_advice_optimum_curve, defaults={"s_values": [0, 1, 2]},
               checks=(("s_values", lambda v: all(int(s) >= 0 for s in v), "S must be >= 0"),)),
    Experiment("bfqrom-estimate", "Best bit-fixing values over prefix/online families",
               run_bfqrom_estimate, defaults={"p": 1, "t": 0, "alternating_rounds": 0},
               optional=("nu_formula",),
               checks=(("p", _non_negative, "must be >= 0"), ("t", _non_negative, "must be >= 0"),
                       ("alternating_rounds", _non_negative, "must be >= 0"))),
    Experiment("separation-report", "Optimal quantum against classical advice at T = 0",
               run_separation_report, defaults={"s_values": [1, 2]},
               checks=(("s_values", lambda v: all(int(s) >= 0 for s in v), "S must be >= 0"),)),
    Experiment("yz-counting", "Good-set counting bound under every small fixing of a toy YZ code",
               run_yz_counting, defaults={"zeta": 0.5, "p": 1}, optional=("code",),
               checks=(("zeta", lambda z: 0.0 <= float(z) <= 1.0, "must lie in [0, 1]"),
                       ("p", _non_negative, "must be >= 0"))),
]

EXPERIMENTS: Dict[str, Experiment] = {e.name: e for e in _REGISTRY}


def list_experiments() -> str:
    """One ``name  description`` line per registered experiment."""
    width = max(len(name) for name in EXPERIMENTS)
    return "\n".join(f"{e.name:<{width}}  {e.description}" for e in _REGISTRY)


def get_experiment(name: str) -> Experiment:
    try:
        return EXPERIMENTS[name]
    except KeyError:
        raise ConfigError(f"Unknown experiment {name!r}; see list:\n{list_experiments()}") from None


@dataclass
class ExperimentOutcome:
    exit_code: int
    paths: List[str] = field(default_factory=list)
    frame: Optional[pd.DataFrame] = None
    config_hash: Optional[str] = None


def write_results(frame: pd.DataFrame, cfg: ExperimentConfig, out_dir: str) -> List[str]:
    """Write ``<name>.csv`` and ``<name>.json`` under out_dir."""
    from . import __version__

    directory = Path(out_dir)
    directory.mkdir(parents=True, exist_ok=True)
    csv_path = directory / f"{cfg.experiment}.csv"
    json_path = directory / f"{cfg.experiment}.json"
    frame.to_csv(csv_path, index=False)
    sidecar = {
        "experiment": cfg.experiment,
        "config": cfg.to_dict(),
        "config_hash": cfg.config_hash(),
        "version": __version__,
        "rows": len(frame),
        "columns": list(frame.columns),
    }
    json_path.write_text(json.dumps(sidecar, indent=2, sort_keys=True, default=str))
    logger.info(f"Wrote {len(frame)} rows to {csv_path}")
    return [str(csv_path), str(json_path)]


def run_experiment(cfg: ExperimentConfig, settings: Optional[Settings] = None) -> ExperimentOutcome:
    """
    Validate, run and write one experiment.

    Args:
        cfg: Experiment config.
        settings: Caps and thread count for this run only; the environment
            settings when None.

    Returns:
        The exit code (0 ok, 2 config, 3 cap, 4 numeric or failed check,
        5 internal), written paths and the result table.
    """
    with override_settings(settings):
        return _run(cfg)


def _run(cfg: ExperimentConfig) -> ExperimentOutcome:
    try:
        experiment = get_experiment(cfg.experiment)
        report = cfg.validate()
        for warning in report["warnings"]:
            logger.warning(warning)
        if not report["is_valid"]:
            raise ConfigError("; ".join(report["errors"]))

        digest = cfg.config_hash()
        frame = experiment.run(cfg)
        frame.insert(0, "config_hash", digest)

        out = cfg.output or get_settings().output_dir
        if out.startswith("s3://"):
            bucket, prefix = parse_s3_uri(out)
            paths = write_results(frame, cfg, tempfile.mkdtemp(prefix="qrom-"))
            status = ResultStore(bucket).upload_results(paths, cfg.experiment, digest, prefix)
            if not all(status.values()):
                logger.error(f"Upload to {out} failed for {[k for k, ok in status.items() if not ok]}")
                return ExperimentOutcome(QromError.exit_code, paths, frame, digest)
            paths = [f"s3://{bucket}/{key}" for key in status]
        else:
            paths = write_results(frame, cfg, os.path.join(out, cfg.experiment))

        if "passed" in frame.columns and not frame["passed"].astype(bool).all():
            failed = int((~frame["passed"].astype(bool)).sum())
            logger.error(f"{cfg.experiment}: {failed} checks failed")
            return ExperimentOutcome(VerificationFailed.exit_code, paths, frame, digest)
        return ExperimentOutcome(0, paths, frame, digest)
    except QromError as e:
        logger.error(f"{cfg.experiment} failed: {e}")
        return ExperimentOutcome(e.exit_code)
    except Exception as e:
        logger.exception(f"{cfg.experiment} failed unexpectedly: {e}")
        return ExperimentOutcome(QromError.exit_code)
