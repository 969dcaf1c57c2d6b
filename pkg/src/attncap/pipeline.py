"""End-to-end replay: oculomotor labels, gate, fusion decision, snippets,
metrics and energy for one trace."""

from __future__ import annotations

from dataclasses import dataclass

from . import energy as en
from .fusion import FusionConfig, FusionHead
from .gate import EyeOnlyRule, GateConfig, collect_snippets, format_decision_log, trigger_rate
from .metrics import MatchRule, evaluate
from .oculomotor import OculomotorConfig

METHODS = ("tva", "eye-only")


def make_fusion(method, model=None, fcfg=FusionConfig()):
    """Fusion handle for ``method``: the trained head for ``tva``, the label rule for ``eye-only``."""
    if method == "tva":
        if model is None:
            raise ValueError("method 'tva' needs a fusion model")
        return FusionHead(model, fcfg)
    if method == "eye-only":
        return EyeOnlyRule()
    raise ValueError(f"unknown method {method!r}; choose from {', '.join(METHODS)}")


@dataclass
class PipelineResult:
    run: object  # GateRun
    metrics: object  # MetricsReport
    energy: object  # EnergyReport
    alpha: float

    @property
    def snippets(self):
        return self.run.snippets

    def decision_log(self, header=None):
        text = format_decision_log(self.run.log_rows())
        if header:
            text = "".join(f"# {h}\n" for h in header) + text
        return text


def run_pipeline(
    trace,
    method="tva",
    model=None,
    gate_cfg=GateConfig(),
    ocfg=OculomotorConfig(),
    fcfg=FusionConfig(),
    params=None,
    rule=MatchRule(),
    fusion=None,
):
    params = en.default_params() if params is None else params
    fusion = make_fusion(method, model, fcfg) if fusion is None else fusion
    run = collect_snippets(trace, gate_cfg, fusion, ocfg)
    metrics = evaluate(run.snippets, trace.truth or (), run.decisions, rule)
    if run.events and run.span[1] > run.span[0]:
        alpha = trigger_rate(run.log_rows())
    else:
        alpha = 0.0
    energy = en.energy_report(en.duty_from_run(run), params, alpha)
    return PipelineResult(run, metrics, energy, alpha)
