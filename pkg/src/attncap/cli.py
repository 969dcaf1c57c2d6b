"""attncap command line: simulate | run | sweep | train | energy | validate.

Exit codes: 0 success, 1 runtime failure, 2 usage or configuration error.
Errors are printed to stderr as one JSON object.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import sys
from dataclasses import asdict, fields, replace
from pathlib import Path

from . import energy as en
from . import scenario as sc
from .fusion import FusionConfig
from ._atomic import atomic_write_text
from .fusion.model import FusionModel, ModelFileError, TrainHyper
from .gate import GateConfig, parse_decision_log, trigger_rate
from .metrics import aggregate_sweeps, format_sweep_csv, sweep_T
from .oculomotor import OculomotorConfig
from .pipeline import METHODS, make_fusion, run_pipeline
from .trace import TraceError, read_trace, validate, write_trace

DEFAULT_T_VALUES = (0.25, 0.5, 1.0, 2.0, 4.0)


class UsageError(Exception):
    """Bad flags, config or input files (exit 2)."""

    def __init__(self, message, path=None):
        super().__init__(message)
        self.path = path


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


# -- configuration ---------------------------------------------------------


def _section(cls, d, name):
    if d is None:
        return cls()
    known = {f.name for f in fields(cls)}
    extra = set(d) - known
    if extra:
        raise UsageError(f"config section {name!r}: unknown keys {', '.join(sorted(extra))}")
    try:
        return cls(**d)
    except (TypeError, ValueError) as exc:
        raise UsageError(f"config section {name!r}: {exc}") from None


def load_config(path):
    if path is None:
        return {}
    p = Path(path)
    if not p.is_file():
        raise UsageError(f"config file not found: {p}", path=str(p))
    try:
        cfg = json.loads(p.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise UsageError(f"config file {p} is not valid JSON: {exc}", path=str(p)) from None
    if not isinstance(cfg, dict):
        raise UsageError(f"config file {p} must hold a JSON object", path=str(p))
    allowed = {"seed", "out", "gate", "oculomotor", "fusion", "train", "corpus", "params", "model", "method", "T_values"}
    extra = set(cfg) - allowed
    if extra:
        raise UsageError(f"config file {p}: unknown keys {', '.join(sorted(extra))}", path=str(p))
    # reject bad sections up front, whichever command reads them
    _pipeline_cfg(argparse.Namespace(), cfg)
    _section(TrainHyper, cfg.get("train"), "train")
    return cfg


def _pick(flag, cfg, key, default=None):
    """Flags win over the config file, which wins over the default."""
    if flag is not None:
        return flag
    return cfg.get(key, default)


def _need_file(path, what):
    if path is None:
        raise UsageError(f"{what} path is required")
    p = Path(path)
    if not p.is_file():
        raise UsageError(f"{what} file not found: {p}", path=str(p))
    return p


def config_hash(effective):
    blob = json.dumps(effective, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()[:16]


def _header(effective):
    return [f"config_hash: {config_hash(effective)}"]


def _out_dir(args, cfg):
    out = Path(_pick(args.out, cfg, "out", "."))
    out.mkdir(parents=True, exist_ok=True)
    return out


def _say(args, msg):
    if not args.quiet:
        print(msg)


def _fmt(v):
    if v is None:
        return "undefined"
    if isinstance(v, bool):
        return "1" if v else "0"
    if isinstance(v, int):
        return str(v)
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _csv(header, columns, rows):
    buf = io.StringIO()
    for h in header:
        buf.write(f"# {h}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([_fmt(v) for v in r])
    return buf.getvalue()


def _load_params(path):
    if path is None:
        return en.default_params()
    p = _need_file(path, "energy parameter")
    try:
        return en.load_params(p)
    except en.EnergyParameterError as exc:
        raise UsageError(str(exc), path=str(p)) from None


def _load_model(path):
    p = _need_file(path, "model")
    try:
        return FusionModel.load(p)
    except (ModelFileError, ValueError, KeyError) as exc:
        raise UsageError(f"cannot load model {p}: {exc}", path=str(p)) from None


def _load_trace(path):
    p = _need_file(path, "trace")
    try:
        return read_trace(p)
    except TraceError as exc:
        raise UsageError(f"cannot read trace {p}: {exc}", path=str(p)) from None


def _pipeline_cfg(args, cfg):
    gate = _section(GateConfig, cfg.get("gate"), "gate")
    if getattr(args, "T", None) is not None:
        gate = replace(gate, T=args.T)
    ocfg = _section(OculomotorConfig, cfg.get("oculomotor"), "oculomotor")
    fd = dict(cfg.get("fusion") or {})
    if "weights" in fd and fd["weights"] is not None:
        fd["weights"] = tuple(fd["weights"])
    fcfg = _section(FusionConfig, fd, "fusion")
    if getattr(args, "threshold", None) is not None:
        fcfg = replace(fcfg, threshold=args.threshold)
    return gate, ocfg, fcfg


# -- commands ------------------------------------------------------------------


def cmd_simulate(args, cfg):
    seed = _pick(args.seed, cfg, "seed")
    src = args.scenario
    if src in sc.BUILTIN_NAMES:
        if seed is None:
            raise UsageError("simulate needs --seed (or 'seed' in the config) for builtin scenarios")
        spec = sc.variant(src, seed) if args.variant else sc.builtin(src, seed=seed, duration=args.duration)
        if args.variant and args.duration is not None:
            spec = sc.tile(spec, args.duration)
    else:
        p = Path(src)
        if not p.is_file():
            raise UsageError(f"{src!r} is neither a builtin scenario ({', '.join(sc.BUILTIN_NAMES)}) nor a file", path=src)
        try:
            spec = sc.ScenarioSpec.loads(p.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise UsageError(f"scenario file {p} is not valid JSON: {exc}", path=str(p)) from None
        if seed is not None:
            spec = replace(spec, seed=int(seed))
        if args.duration is not None:
            spec = sc.tile(spec, args.duration)
    trace = sc.generate(spec)
    out = Path(args.trace) if args.trace else _out_dir(args, cfg) / f"{spec.name}_{spec.seed}.jsonl"
    out.parent.mkdir(parents=True, exist_ok=True)
    write_trace(trace, out)
    _say(args, f"wrote {out}: {len(trace.gaze)} gaze samples, {len(trace.frames)} frames")
    truth = list(trace.truth) if trace.truth is not None else []
    _say(args, f"truth intervals: {len(truth)}")
    for s, e, oid in truth:
        _say(args, f"  [{s:.3f}, {e:.3f}) object {oid}")
    return 0


def _digest(path):
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()[:16]


def _write(path, text):
    atomic_write_text(path, text)
    return path


def cmd_run(args, cfg):
    gate, ocfg, fcfg = _pipeline_cfg(args, cfg)
    method = _pick(args.method, cfg, "method", "tva")
    if method not in METHODS:
        raise UsageError(f"unknown method {method!r}; choose from {', '.join(METHODS)}")
    model_path = _pick(args.model, cfg, "model")
    model = _load_model(model_path) if method == "tva" else None
    params_path = _pick(args.params, cfg, "params")
    params = _load_params(params_path)
    trace = _load_trace(args.trace)
    res = run_pipeline(trace, method, model, gate, ocfg, fcfg, params)
    out = _out_dir(args, cfg)
    eff = {
        "command": "run", "method": method, "gate": asdict(gate), "oculomotor": asdict(ocfg), "fusion": asdict(fcfg),
        "energy": params.to_items(), "model": _digest(model_path) if model else None,
        "trace": str(args.trace),
    }
    head = _header(eff)
    _write(out / "snippets.csv", _csv(head, ("t_start", "t_end", "trigger_score"),
                                      [(s.t_start, s.t_end, s.trigger_score) for s in res.snippets]))
    _write(out / "decisions.csv", res.decision_log(head))
    m = res.metrics
    _write(out / "metrics.csv", _csv(head, ("method", "TP", "FP", "FN", "precision", "recall", "AP"),
                                     [(method, m.TP, m.FP, m.FN, m.precision, m.recall, m.AP)]))
    _write(out / "energy.csv", en.format_report([res.energy], head))
    _say(args, json.dumps({
        "snippets": len(res.snippets), "TP": m.TP, "FP": m.FP, "FN": m.FN,
        "precision": m.precision, "recall": m.recall, "alpha": res.alpha, "savings": res.energy.savings,
    }))
    return 0


def _float_list(text):
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def cmd_sweep(args, cfg):
    gate, ocfg, fcfg = _pipeline_cfg(args, cfg)
    T_values = args.T_values if args.T_values is not None else cfg.get("T_values", list(DEFAULT_T_VALUES))
    if len(T_values) < 2:
        raise UsageError("a sweep needs at least two T values")
    method = _pick(args.method, cfg, "method", "tva")
    if method not in METHODS:
        raise UsageError(f"unknown method {method!r}; choose from {', '.join(METHODS)}")
    model_path = _pick(args.model, cfg, "model")
    model = _load_model(model_path) if method == "tva" else None
    params = _load_params(_pick(args.params, cfg, "params"))
    traces = [(p, _load_trace(p)) for p in args.traces]
    per = []
    for _, tr in traces:
        per.append(sweep_T(tr, T_values, gate, make_fusion(method, model, fcfg), ocfg, params))
    out = _out_dir(args, cfg)
    eff = {
        "command": "sweep", "method": method, "gate": asdict(gate), "oculomotor": asdict(ocfg),
        "fusion": asdict(fcfg), "T_values": T_values, "energy": params.to_items(),
        "model": _digest(model_path) if model else None,
        "traces": [str(p) for p, _ in traces],
    }
    head = _header(eff)
    _write(out / "sweep.csv", format_sweep_csv(aggregate_sweeps(per), head))
    body = []
    for (p, _), rows in zip(traces, per):
        text = format_sweep_csv(rows, None, extra=[("trace", Path(p).name)])
        body.append(text if not body else text.split("\n", 1)[1])
    _write(out / "sweep_per_trace.csv", "".join(f"# {h}\n" for h in head) + "".join(body))
    _say(args, f"wrote {out / 'sweep.csv'} ({len(T_values)} rows over {len(traces)} traces)")
    return 0


def cmd_train(args, cfg):
    from .training import CorpusSpec, train_from_corpus

    seed = _pick(args.seed, cfg, "seed")
    if seed is None:
        raise UsageError("train needs --seed (or 'seed' in the config)")
    cd = dict(cfg.get("corpus") or {})
    if args.corpus is not None:
        p = _need_file(args.corpus, "corpus spec")
        try:
            cd.update(json.loads(p.read_text(encoding="utf-8")))
        except json.JSONDecodeError as exc:
            raise UsageError(f"corpus file {p} is not valid JSON: {exc}", path=str(p)) from None
    if args.count is not None:
        cd["count"] = args.count
    try:
        corpus = CorpusSpec.from_dict(cd)
    except (ValueError, KeyError, TypeError) as exc:
        raise UsageError(f"corpus: {exc}") from None
    hyper = _section(TrainHyper, cfg.get("train"), "train")
    if args.epochs is not None:
        hyper = replace(hyper, epochs=args.epochs)
    if args.lr is not None:
        hyper = replace(hyper, lr=args.lr)
    _, ocfg, fcfg = _pipeline_cfg(args, cfg)
    res = train_from_corpus(corpus, hyper, int(seed), fcfg, ocfg)
    out = _out_dir(args, cfg)
    eff = {"command": "train", "seed": int(seed), "corpus": corpus.to_dict(), "train": asdict(hyper),
           "oculomotor": asdict(ocfg), "fusion": asdict(fcfg)}
    model_path = Path(args.model_out) if args.model_out else out / "model.json"
    res.model.save(model_path)
    head = _header(eff) + [f"split train/test/validation: {res.sizes[0]}/{res.sizes[1]}/{res.sizes[2]}",
                           f"best_epoch: {res.log.best_epoch}", f"test_accuracy: {_fmt(res.test_accuracy)}"]
    _write(out / "train_log.csv", "".join(f"# {h}\n" for h in head) + res.log.to_csv())
    _say(args, f"wrote {model_path}; split {res.sizes}; test accuracy {_fmt(res.test_accuracy)}")
    return 0


def cmd_energy(args, cfg):
    params = _load_params(_pick(args.params, cfg, "params"))
    if args.capacity is not None:
        params = replace(params, battery_capacity_Wh=args.capacity)
    alpha = None
    if args.log is not None:
        p = _need_file(args.log, "decision log")
        try:
            rows = parse_decision_log(p.read_text(encoding="utf-8"))
            times = en.duty_from_log(rows, uses_scene=not args.no_fusion_time)
            alpha = trigger_rate(rows)
        except (ValueError, KeyError) as exc:
            raise UsageError(f"cannot use decision log {p}: {exc}", path=str(p)) from None
    elif args.pilot:
        times = en.DutyTimes.from_fractions(args.always_on or 3600.0, params.pilot_fusion_fraction,
                                            params.pilot_capture_fraction)
    else:
        if args.always_on is None:
            raise UsageError("energy needs --log, --pilot, or --always-on with --fusion/--captured")
        try:
            times = en.DutyTimes(args.always_on, args.fusion or 0.0, args.captured or 0.0)
        except en.EnergyParameterError as exc:
            raise UsageError(str(exc)) from None
    rep = en.energy_report(times, params, alpha)
    out = _out_dir(args, cfg)
    eff = {"command": "energy", "times": asdict(times), "energy": params.to_items()}
    _write(out / "energy.csv", en.format_report([rep], _header(eff)))
    _say(args, json.dumps({"E_MemX": rep.E_MemX, "E_baseline": rep.E_baseline, "savings": rep.savings,
                           "average_power_W": rep.average_power_W, "battery_hours": rep.battery_hours}))
    return 0


def _validate_one(path):
    p = Path(path)
    if not p.is_file():
        raise UsageError(f"file not found: {p}", path=str(p))
    text = p.read_text(encoding="utf-8")
    head = text.lstrip()[:1]
    if p.suffix == ".json" and head == "{":
        d = json.loads(text)
        if d.get("format") == "attncap-fusion-model":
            FusionModel.from_dict(d)
            return "model", []
        sc.ScenarioSpec.from_dict(d)
        return "scenario", []
    if p.suffix in (".txt", ".params"):
        en.parse_params(text, source=str(p))
        return "energy parameters", []
    return "trace", validate(read_trace(p))


def cmd_validate(args, cfg):
    bad = 0
    for path in args.paths:
        try:
            kind, problems = _validate_one(path)
        except sc.ScenarioValidationError as exc:
            kind, problems = "scenario", exc.violations
        except (TraceError, sc.ScenarioValidationError, en.EnergyParameterError, ModelFileError, ValueError,
                KeyError) as exc:
            kind, problems = "file", [str(exc)]
        if problems:
            bad += 1
            print(json.dumps({"path": str(path), "valid": False, "kind": kind, "violations": problems}))
        else:
            _say(args, json.dumps({"path": str(path), "valid": True, "kind": kind}))
    return 1 if bad else 0


# -- entry point -----------------------------------------------------------------


def _global_flags(p, suppress):
    d = argparse.SUPPRESS if suppress else None
    p.add_argument("--config", default=d, help="JSON config file; flags override it")
    p.add_argument("--seed", type=int, default=d)
    p.add_argument("--out", default=d, help="output directory (default: current directory)")
    p.add_argument("--quiet", action="store_true", default=argparse.SUPPRESS if suppress else False)


def build_parser():
    ap = _Parser(prog="attncap", description="Eye-gated attention capture: simulate, replay, train, evaluate.")
    _global_flags(ap, suppress=False)
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("simulate", help="generate a synthetic trace")
    _global_flags(p, suppress=True)
    p.add_argument("scenario", help=f"builtin name ({', '.join(sc.BUILTIN_NAMES)}) or scenario JSON file")
    p.add_argument("--trace", "-o", help="output trace path (default: OUT/<name>_<seed>.jsonl)")
    p.add_argument("--duration", type=float, help="repeat or truncate the script to this many seconds")
    p.add_argument("--variant", action="store_true", help="randomized corpus variant of a builtin")
    p.set_defaults(func=cmd_simulate)

    def pipeline_flags(p):
        p.add_argument("--model", help="fusion model file (required for --method tva)")
        p.add_argument("--method", choices=METHODS)
        p.add_argument("--params", help="energy parameter file (default: packaged calibration)")
        p.add_argument("--threshold", type=float, help="fusion acceptance threshold")

    p = sub.add_parser("run", help="replay the pipeline over one trace")
    _global_flags(p, suppress=True)
    p.add_argument("trace")
    pipeline_flags(p)
    p.add_argument("--T", type=float, help="gate window length, seconds")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("sweep", help="replay traces over several T values")
    _global_flags(p, suppress=True)
    p.add_argument("traces", nargs="+")
    pipeline_flags(p)
    p.add_argument("--T-values", dest="T_values", type=_float_list, help="comma-separated, e.g. 0.5,1,2")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("train", help="train the fusion head on a synthetic corpus")
    _global_flags(p, suppress=True)
    p.add_argument("--corpus", help="corpus JSON: count, seed, names, per_class, settle")
    p.add_argument("--count", type=int, help="number of corpus traces")
    p.add_argument("--epochs", type=int)
    p.add_argument("--lr", type=float)
    p.add_argument("--model-out", dest="model_out", help="model path (default: OUT/model.json)")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("energy", help="energy report from duty times or a decision log")
    _global_flags(p, suppress=True)
    p.add_argument("--params")
    p.add_argument("--log", help="decision log CSV written by 'run'")
    p.add_argument("--no-fusion-time", action="store_true", help="the log's fusion handle did not read the scene")
    p.add_argument("--pilot", action="store_true", help="use the calibrated pilot duty profile")
    p.add_argument("--always-on", dest="always_on", type=float, help="seconds")
    p.add_argument("--fusion", type=float, help="seconds of fusion")
    p.add_argument("--captured", type=float, help="seconds auto-captured")
    p.add_argument("--capacity", type=float, help="battery capacity, Wh")
    p.set_defaults(func=cmd_energy)

    p = sub.add_parser("validate", help="check traces, scenario specs, models or parameter files")
    _global_flags(p, suppress=True)
    p.add_argument("paths", nargs="+")
    p.set_defaults(func=cmd_validate)
    return ap


def _fail(code, kind, message, path=None):
    err = {"error": kind, "message": message, "exit_code": code}
    if path is not None:
        err["path"] = path
    print(json.dumps(err), file=sys.stderr)
    return code


def main(argv=None):
    try:
        args = build_parser().parse_args(argv)
        cfg = load_config(args.config)
        return args.func(args, cfg)
    except UsageError as exc:
        return _fail(2, "usage", str(exc), exc.path)
    except sc.ScenarioValidationError as exc:
        return _fail(2, "scenario", str(exc))
    except (sc.UnknownScenarioError, en.EnergyParameterError) as exc:
        return _fail(2, "config", str(exc))
    except OSError as exc:
        return _fail(1, "io", str(exc), getattr(exc, "filename", None))
    except Exception as exc:  # noqa: BLE001 - every failure leaves as JSON
        return _fail(1, type(exc).__name__, str(exc))


if __name__ == "__main__":
    sys.exit(main())
