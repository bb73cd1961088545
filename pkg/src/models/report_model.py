"""
report_model.py: Export of audit, threshold and extraction reports.
Reports become plain mappings (exact fractions as "a/b" strings) for YAML export and one-line
audit records for logs and the CLI.
"""
from __future__ import annotations

import logging
from dataclasses import fields, is_dataclass
from enum import Enum
from fractions import Fraction
from typing import Any

import numpy as np
import yaml

logger = logging.getLogger(__name__)


def _plain(value: Any) -> Any:
    """Convert report values to YAML-safe builtins."""
    if isinstance(value, Enum):
        return value.value
    if value is None or isinstance(value, (bool, str)):
        return value
    if isinstance(value, Fraction):
        return str(value)
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.floating):
        return float(value)
    if isinstance(value, (int, float)):
        return value
    if isinstance(value, dict):
        return {str(k): _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple, frozenset, set, np.ndarray)):
        return [_plain(v) for v in value]
    # FieldVector and EncodedMessage
    if hasattr(value, "values") and not callable(value.values):
        return [int(v) for v in value.values]
    if is_dataclass(value):
        return {f.name: _plain(getattr(value, f.name)) for f in fields(value)}
    return str(value)


def report_to_dict(report) -> dict[str, Any]:
    """
    Flatten an AuditReport, ThresholdReport or ExtractionResult into a mapping,
    including the derived values a reader would otherwise recompute.
    """
    from ..analysis import ThresholdReport
    from ..audit import AuditReport
    from ..extractor import ExtractionResult

    if isinstance(report, AuditReport):
        sample = report.sample
        output = {'report': 'audit'}
        output['sample'] = {
            't': sample.t,
            'g': sample.g,
            'sampling': sample.sampling.value,
            'gamma': sample.gamma,
            'omega': sample.omega,
            'p0': str(sample.p0),
        }
        output['p-value'] = float(report.p_value)
        output['alpha'] = report.alpha
        output['decision'] = report.decision.value
        output['theta-L'] = float(report.theta_L)
        output['confidence-level'] = report.confidence_level
        output['degenerate'] = report.degenerate
        output['rules-agree'] = report.rules_agree
        if report.advice:
            output['advice'] = report.advice
        if report.failures:
            output['failures'] = [int(o) for o in report.failures]
        return output
    if isinstance(report, ThresholdReport):
        output = {'report': 'threshold'}
        output.update({f.name.replace('_', '-'): _plain(getattr(report, f.name)) for f in fields(report)})
        output['dstar'] = report.dstar
        output['threshold-float'] = report.threshold_float
        return output
    if isinstance(report, ExtractionResult):
        return {
            'report': 'extraction',
            'm-hat': _plain(report.m_hat),
            'M-hat': _plain(report.M_hat),
            'distance': report.distance,
            'tie': report.tie,
            'unique': report.unique,
            'queries': report.queries,
            'dstar': report.dstar,
        }
    raise TypeError(f"Cannot export a {type(report).__name__}")


def audit_record(report) -> str:
    """One-line key=value record of an audit, in a fixed field order."""
    sample = report.sample
    return (f"t={sample.t} g={sample.g} sampling={sample.sampling.value} "
            f"p_value={float(report.p_value):.6g} alpha={report.alpha} "
            f"decision={report.decision.value} theta_L={float(report.theta_L):.6g}")


def export_report_yaml(report, output_path: str) -> None:
    with open(output_path, 'w', encoding='utf-8') as f:
        yaml.Dumper.ignore_aliases = lambda *args: True
        yaml.dump(report_to_dict(report), f, allow_unicode=True, sort_keys=False,
                  Dumper=yaml.Dumper)
    logger.info("Wrote %s", output_path)
