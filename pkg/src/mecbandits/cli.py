"""Batch experiment front-end: JSON config plus flags in, CSV artifacts out.

Verbs: ``run`` (one policy), ``compare``, ``sweep-alpha``, ``sweep-arms``,
``validate`` (parse-only). Exit codes: 0 success, 2 config error,
3 runtime/I-O error. The config schema is strict: unknown keys and
out-of-range values fail before anything runs, naming the offending key.
"""

import argparse
import csv
import json
import sys
from dataclasses import dataclass, field
from pathlib import Path

from . import __version__
from .env import PRESETS, ServerConfig, TaskProfile, make_server_bank
from .harness import RunConfig, PolicySpec, aggregate, compare, sweep_alpha, sweep_arms
from .policies import POLICY_NAMES


class ConfigError(Exception):
    """Invalid configuration file or flag value."""


EXPERIMENTS = ("single", "compare", "alpha-sweep", "arm-sweep")
DEFAULT_POLICIES = ["ssph", "ts", "dts", "dots", "ducb"]
DEFAULT_ALPHA_GRID = [round(0.1 * i, 1) for i in range(1, 10)]
DEFAULT_ARM_GRID = [5, 10, 15, 20, 25]

# JSON key -> ServerConfig field. All eight keys are required per server.
SERVER_KEYS = {
    "psi0": "psi0", "psi1": "psi1", "w": "w", "n_max": "n_max",
    "lambda": "lam", "r": "r", "p_b": "p_b", "c": "c",
}
PROFILE_KEYS = ("l_u", "omega", "kappa", "b_u", "b_d", "p_u_db", "p_d_db",
                "gamma_los", "gamma_nlos", "d_max", "delta")


@dataclass
class ExperimentSpec:
    """Fully resolved experiment description (every field explicit)."""

    experiment: str = "compare"
    preset: str = "paper-5"
    servers: list | None = None
    horizon: int = 5000
    runs: int = 50
    seed: int = 0
    arms: int = 5
    out: str = "results"
    policy: str = "ssph"
    policies: list = field(default_factory=lambda: list(DEFAULT_POLICIES))
    alpha: float = 0.6
    sigma: float = 0.1
    dts_discount: float = 0.8
    dots_discount: float = 0.7
    ducb_discount: float = 0.5
    ducb_xi: float = 0.5
    alpha_grid: list = field(default_factory=lambda: list(DEFAULT_ALPHA_GRID))
    arm_grid: list = field(default_factory=lambda: list(DEFAULT_ARM_GRID))
    latency_cap_s: float = 10.0
    profile: dict = field(default_factory=dict)

    def to_dict(self):
        """JSON-ready resolved config; re-parsing it yields an equal spec."""
        out = {
            "experiment": self.experiment,
            "preset": self.preset,
            "horizon": self.horizon,
            "runs": self.runs,
            "seed": self.seed,
            "arms": self.arms,
            "out": self.out,
            "policy": self.policy,
            "policies": list(self.policies),
            "alpha": self.alpha,
            "sigma": self.sigma,
            "dts_discount": self.dts_discount,
            "dots_discount": self.dots_discount,
            "ducb_discount": self.ducb_discount,
            "ducb_xi": self.ducb_xi,
            "alpha_grid": list(self.alpha_grid),
            "arm_grid": list(self.arm_grid),
            "latency_cap_s": self.latency_cap_s,
            "profile": dict(self.profile),
        }
        if self.servers is not None:
            out["servers"] = [dict(s) for s in self.servers]
        return out


def _as_int(key, value):
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"config key '{key}': expected an integer, got {value!r}")
    return value


def _as_number(key, value):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"config key '{key}': expected a number, got {value!r}")
    return float(value)


def _as_str(key, value):
    if not isinstance(value, str):
        raise ConfigError(f"config key '{key}': expected a string, got {value!r}")
    return value


def _parse_servers(value):
    if not isinstance(value, list) or not value:
        raise ConfigError("config key 'servers': expected a non-empty list of objects")
    parsed = []
    for i, entry in enumerate(value):
        where = f"servers[{i}]"
        if not isinstance(entry, dict):
            raise ConfigError(f"config key '{where}': expected an object")
        unknown = set(entry) - set(SERVER_KEYS)
        if unknown:
            raise ConfigError(f"config key '{where}': unknown key '{sorted(unknown)[0]}'")
        missing = set(SERVER_KEYS) - set(entry)
        if missing:
            raise ConfigError(f"config key '{where}': missing key '{sorted(missing)[0]}'")
        kwargs = {}
        for key, fname in SERVER_KEYS.items():
            val = entry[key]
            if fname in ("w", "n_max"):
                kwargs[fname] = _as_int(f"{where}.{key}", val)
            else:
                kwargs[fname] = _as_number(f"{where}.{key}", val)
        try:
            ServerConfig(**kwargs)
        except ValueError as err:
            raise ConfigError(f"config key '{where}': {err}") from err
        parsed.append({key: entry[key] for key in SERVER_KEYS})
    return parsed


def _parse_profile(value):
    if not isinstance(value, dict):
        raise ConfigError("config key 'profile': expected an object")
    unknown = set(value) - set(PROFILE_KEYS)
    if unknown:
        raise ConfigError(f"config key 'profile': unknown key '{sorted(unknown)[0]}'")
    resolved = {key: _as_number(f"profile.{key}", val) for key, val in value.items()}
    try:
        TaskProfile(**resolved)
    except ValueError as err:
        raise ConfigError(f"config key 'profile': {err}") from err
    return resolved


def _validate(data):
    known = {
        "experiment", "preset", "servers", "horizon", "runs", "seed", "arms",
        "out", "policy", "policies", "alpha", "sigma", "dts_discount",
        "dots_discount", "ducb_discount", "ducb_xi", "alpha_grid", "arm_grid",
        "latency_cap_s", "profile",
    }
    unknown = set(data) - known
    if unknown:
        raise ConfigError(f"unknown config key '{sorted(unknown)[0]}'")

    spec = ExperimentSpec()

    if "experiment" in data:
        value = _as_str("experiment", data["experiment"])
        if value not in EXPERIMENTS:
            raise ConfigError(f"config key 'experiment': must be one of {EXPERIMENTS}, got '{value}'")
        spec.experiment = value
    if "preset" in data:
        value = _as_str("preset", data["preset"])
        if value not in PRESETS:
            raise ConfigError(f"config key 'preset': unknown preset '{value}'")
        spec.preset = value
    if "servers" in data:
        spec.servers = _parse_servers(data["servers"])
    for key in ("horizon", "runs"):
        if key in data:
            value = _as_int(key, data[key])
            if value < 1:
                raise ConfigError(f"config key '{key}': must be >= 1, got {value}")
            setattr(spec, key, value)
    if "seed" in data:
        spec.seed = _as_int("seed", data["seed"])
    if "arms" in data:
        value = _as_int("arms", data["arms"])
        if value < 1:
            raise ConfigError(f"config key 'arms': must be >= 1, got {value}")
        spec.arms = value
    elif spec.servers is not None:
        spec.arms = len(spec.servers)
    if "out" in data:
        spec.out = _as_str("out", data["out"])
    if "policy" in data:
        value = _as_str("policy", data["policy"]).lower()
        if value not in POLICY_NAMES:
            raise ConfigError(f"config key 'policy': unknown policy '{data['policy']}'")
        spec.policy = value
    if "policies" in data:
        value = data["policies"]
        if not isinstance(value, list) or not value:
            raise ConfigError("config key 'policies': expected a non-empty list of names")
        names = []
        for item in value:
            name = _as_str("policies", item).lower()
            if name not in POLICY_NAMES:
                raise ConfigError(f"config key 'policies': unknown policy '{item}'")
            names.append(name)
        spec.policies = names
    if "alpha" in data:
        value = _as_number("alpha", data["alpha"])
        if not 0.0 <= value < 1.0:
            raise ConfigError(f"config key 'alpha': must lie in [0, 1), got {value}")
        spec.alpha = value
    if "sigma" in data:
        value = _as_number("sigma", data["sigma"])
        if value <= 0.0:
            raise ConfigError(f"config key 'sigma': must be positive, got {value}")
        spec.sigma = value
    for key in ("dts_discount", "dots_discount", "ducb_discount"):
        if key in data:
            value = _as_number(key, data[key])
            if not 0.0 < value <= 1.0:
                raise ConfigError(f"config key '{key}': must lie in (0, 1], got {value}")
            setattr(spec, key, value)
    if "ducb_xi" in data:
        value = _as_number("ducb_xi", data["ducb_xi"])
        if value <= 0.0:
            raise ConfigError(f"config key 'ducb_xi': must be positive, got {value}")
        spec.ducb_xi = value
    if "alpha_grid" in data:
        value = data["alpha_grid"]
        if not isinstance(value, list) or not value:
            raise ConfigError("config key 'alpha_grid': expected a non-empty list")
        grid = []
        for item in value:
            alpha = _as_number("alpha_grid", item)
            if not 0.0 <= alpha < 1.0:
                raise ConfigError(f"config key 'alpha_grid': values must lie in [0, 1), got {alpha}")
            grid.append(alpha)
        spec.alpha_grid = grid
    if "arm_grid" in data:
        value = data["arm_grid"]
        if not isinstance(value, list) or not value:
            raise ConfigError("config key 'arm_grid': expected a non-empty list")
        grid = []
        for item in value:
            count = _as_int("arm_grid", item)
            if count < 1:
                raise ConfigError(f"config key 'arm_grid': values must be >= 1, got {count}")
            grid.append(count)
        spec.arm_grid = grid
    if "latency_cap_s" in data:
        value = _as_number("latency_cap_s", data["latency_cap_s"])
        if value <= 0.0:
            raise ConfigError(f"config key 'latency_cap_s': must be positive, got {value}")
        spec.latency_cap_s = value
    if "profile" in data:
        spec.profile = _parse_profile(data["profile"])
    return spec


def parse_spec(path=None, overrides=None):
    """Parse a JSON config file into a fully resolved ExperimentSpec.

    Flag ``overrides`` (a dict; None values ignored) win over file
    values, defaults fill the rest. An empty or absent file means all
    defaults. Missing files, syntax errors, unknown keys, and
    out-of-range values raise ConfigError naming the problem.
    """
    data = {}
    if path is not None:
        p = Path(path)
        if not p.is_file():
            raise ConfigError(f"config file not found: {path}")
        text = p.read_text(encoding="utf-8")
        if text.strip():
            try:
                data = json.loads(text)
            except json.JSONDecodeError as err:
                raise ConfigError(f"config syntax error in {path}: {err}") from err
            if not isinstance(data, dict):
                raise ConfigError(
                    f"config root must be a JSON object, got {type(data).__name__}")
    merged = dict(data)
    for key, value in (overrides or {}).items():
        if value is not None:
            merged[key] = value
    return _validate(merged)


def _experiment_config(spec):
    classes = (tuple(ServerConfig(**{SERVER_KEYS[k]: v for k, v in entry.items()})
                     for entry in spec.servers)
               if spec.servers is not None else PRESETS[spec.preset])
    servers = make_server_bank(spec.arms, classes)
    profile = TaskProfile(**spec.profile)
    return RunConfig(horizon=spec.horizon, num_runs=spec.runs, base_seed=spec.seed,
                     num_arms=spec.arms, servers=servers, profile=profile,
                     latency_cap_s=spec.latency_cap_s)


def _policy_spec(spec, name):
    key = name.lower()
    if key == "ssph":
        params = {"alpha": spec.alpha, "sigma": spec.sigma}
    elif key == "dts":
        params = {"dts_discount": spec.dts_discount}
    elif key == "dots":
        params = {"dots_discount": spec.dots_discount}
    elif key == "ducb":
        params = {"ducb_discount": spec.ducb_discount, "ducb_xi": spec.ducb_xi}
    else:
        params = {}
    return PolicySpec(key, params)


def _fmt(value):
    if isinstance(value, float):
        return format(value, ".12g")
    return str(value)


def _write_timeseries(path, results, written):
    written.append(path)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["run", "t", "policy", "chosen_arm", "reward", "best_reward",
                         "delay_s", "running_regret", "running_latency_s"])
        num_runs = len(next(iter(results.values())))
        for run_idx in range(num_runs):
            for name, records in results.items():
                rec = records[run_idx]
                running_regret = rec.running_regret()
                running_latency = rec.running_latency()
                for t in range(len(rec)):
                    writer.writerow([
                        run_idx, t + 1, name, int(rec.chosen[t]),
                        _fmt(float(rec.reward[t])), _fmt(float(rec.best_reward[t])),
                        _fmt(float(rec.delay_s[t])), _fmt(float(running_regret[t])),
                        _fmt(float(running_latency[t])),
                    ])


def _write_summary(path, results, written):
    written.append(path)
    rows = []
    for name, records in results.items():
        agg = aggregate(records)
        rows.append([name, _fmt(agg.final_regret_mean), _fmt(agg.final_regret_std),
                     _fmt(agg.final_latency_mean), _fmt(agg.final_latency_std)])
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["policy", "mean_regret", "stdev_regret",
                         "mean_latency_s", "stdev_latency_s"])
        writer.writerows(rows)
    return rows


def _write_sweep(path, key_name, points, written):
    written.append(path)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow([key_name, "policy", "mean_regret", "stdev_regret"])
        for point in points:
            value = int(point.value) if key_name == "arms" else point.value
            writer.writerow([_fmt(value), point.policy,
                             _fmt(point.mean_regret), _fmt(point.stdev_regret)])


def _write_meta(path, spec, written):
    written.append(path)
    meta = {
        "version": __version__,
        "seed": spec.seed,
        "latency_cap_s": spec.latency_cap_s,
        "config": spec.to_dict(),
    }
    path.write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _cleanup(written):
    for path in written:
        try:
            Path(path).unlink(missing_ok=True)
        except OSError:
            pass


def run_and_emit(spec):
    """Execute the experiment described by ``spec`` and write its artifacts.

    Returns a process exit status. Identical spec and seed produce
    byte-identical CSVs; on failure, partially written outputs are
    removed.
    """
    outdir = Path(spec.out)
    written = []
    try:
        outdir.mkdir(parents=True, exist_ok=True)
        config = _experiment_config(spec)
        if spec.experiment in ("single", "compare"):
            names = [spec.policy] if spec.experiment == "single" else spec.policies
            results = compare(config, [_policy_spec(spec, n) for n in names])
            _write_timeseries(outdir / "timeseries.csv", results, written)
            rows = _write_summary(outdir / "summary.csv", results, written)
            _write_meta(outdir / "meta", spec, written)
            print(f"{spec.experiment}: horizon={spec.horizon} runs={spec.runs} "
                  f"arms={spec.arms} seed={spec.seed}")
            print("policy,mean_regret,stdev_regret,mean_latency_s,stdev_latency_s")
            for row in rows:
                print(",".join(str(cell) for cell in row))
        else:
            if spec.experiment == "alpha-sweep":
                points = sweep_alpha(spec.alpha_grid, config, sigma=spec.sigma)
                key_name = "alpha"
            else:
                specs = [_policy_spec(spec, n) for n in spec.policies]
                points = sweep_arms(spec.arm_grid, specs, config)
                key_name = "arms"
            _write_sweep(outdir / "sweep.csv", key_name, points, written)
            _write_meta(outdir / "meta", spec, written)
            print(f"{spec.experiment}: runs={spec.runs} per point, seed={spec.seed}")
            print(f"{key_name},policy,mean_regret,stdev_regret")
            for point in points:
                print(f"{_fmt(point.value)},{point.policy},"
                      f"{_fmt(point.mean_regret)},{_fmt(point.stdev_regret)}")
    except OSError as err:
        _cleanup(written)
        where = getattr(err, "filename", None) or str(outdir)
        print(f"error: I/O failure at {where}: {err}", file=sys.stderr)
        return 3
    except Exception as err:  # noqa: BLE001 - report, clean up, exit nonzero
        _cleanup(written)
        print(f"error: {err}", file=sys.stderr)
        return 3
    print(f"wrote {', '.join(str(p) for p in written)}")
    return 0


_VERB_TO_EXPERIMENT = {
    "run": "single",
    "compare": "compare",
    "sweep-alpha": "alpha-sweep",
    "sweep-arms": "arm-sweep",
    "validate": None,
}


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="mecbandits",
        description="Offloading bandit experiments: seeded runs, sweeps, CSV artifacts.")
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "run": "run one policy for the configured number of runs",
        "compare": "run every configured policy on shared trajectories",
        "sweep-alpha": "sweep the retention rate of the score learner",
        "sweep-arms": "sweep the number of arms for every configured policy",
        "validate": "parse and print the resolved config, run nothing",
    }
    for verb in _VERB_TO_EXPERIMENT:
        p = sub.add_parser(verb, help=helps[verb])
        p.add_argument("--config", default=None, help="path to a JSON config file")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--horizon", type=int, default=None)
        p.add_argument("--runs", type=int, default=None)
        p.add_argument("--arms", type=int, default=None)
        p.add_argument("--out", default=None, help="output directory")
        p.add_argument("--policy", default=None)
    args = parser.parse_args(argv)
    overrides = {key: getattr(args, key)
                 for key in ("seed", "horizon", "runs", "arms", "out", "policy")}
    experiment = _VERB_TO_EXPERIMENT[args.command]
    if experiment is not None:
        overrides["experiment"] = experiment
    try:
        spec = parse_spec(args.config, overrides)
    except ConfigError as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    if args.command == "validate":
        print(json.dumps(spec.to_dict(), indent=2, sort_keys=True))
        return 0
    return run_and_emit(spec)


def entry():
    raise SystemExit(main())
