"""Structural checks on value tables produced by the best-response program.

All checks look at the finitely many reachable beliefs only; a pass says
nothing about pi values the sensor never reaches.
"""
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Optional

import pandas as pd

from engine_solver import PI_DECIMALS, action_label
from models_detection import BLANK
from strategies import ThresholdStrategy, format_messages

CONCAVITY_TOL = 1e-9
SUFFICIENCY_TOL = 1e-9
INTERVAL_TIE_TOL = 1e-12
REACHABLE_SCOPE = 'reachable pi values only'


@dataclass(frozen=True)
class Violation:
    t: int
    messages: tuple
    detail: str
    points: tuple = ()
    gap: Optional[float] = None


@dataclass
class StructureReport:
    check: str
    passed: bool
    scope: str = REACHABLE_SCOPE
    points: dict = field(default_factory=dict)
    violations: list = field(default_factory=list)
    candidate: Optional[ThresholdStrategy] = None

    def to_frame(self):
        rows = []
        for (t, messages), labels in self.points.items():
            for pi, action in labels:
                rows.append({'check': self.check, 't': t, 'message_history': format_messages(messages),
                             'pi': pi, 'action': action_label(action), 'violation': ''})
        for v in self.violations:
            rows.append({'check': self.check, 't': v.t, 'message_history': format_messages(v.messages),
                         'pi': v.points[0] if v.points else float('nan'), 'action': '', 'violation': v.detail})
        return pd.DataFrame(rows, columns=['check', 't', 'message_history', 'pi', 'action', 'violation'])


def verify_concavity(table, tol=CONCAVITY_TOL):
    """V_t(., messages) must lie on or above every chord of consecutive reachable pi."""
    report = StructureReport('concavity', True)
    for (t, messages), entries in table.groups().items():
        report.points[(t, messages)] = [(e.pi, e.action) for e in entries]
        for a, b, c in zip(entries, entries[1:], entries[2:]):
            chord = a.value + (c.value - a.value) * (b.pi - a.pi) / (c.pi - a.pi)
            if b.value < chord - tol:
                report.violations.append(Violation(
                    t, messages, 'V({:.9g})={:.17g} below chord {:.17g}'.format(b.pi, b.value, chord),
                    ((a.pi, a.value), (b.pi, b.value), (c.pi, c.value)), chord - b.value))
    report.passed = not report.violations
    return report


def _sticky_labels(entries, tol):
    """Argmin labels that keep the previous label while it is still optimal."""
    labels = []
    for e in entries:
        optimal = e.optimal_actions(tol)
        if labels and labels[-1] in optimal:
            labels.append(labels[-1])
        else:
            labels.append(e.action)
    return labels


def _regions(pis, labels, last_step):
    """Stop intervals spanned by each label's reachable pi.

    At t = T neighbouring regions meet halfway between their outer points and
    the end regions reach 0 and 1.
    """
    spans = {}
    for pi, d in zip(pis, labels):
        if d == BLANK:
            continue
        lo, hi = spans.get(d, (pi, pi))
        spans[d] = (min(lo, pi), max(hi, pi))
    if not last_step:
        return spans
    ordered = sorted(spans.items(), key=lambda kv: kv[1][0])
    widened = {}
    for k, (d, (lo, hi)) in enumerate(ordered):
        lo = 0.0 if k == 0 else (ordered[k - 1][1][1] + lo) / 2.0
        hi = 1.0 if k == len(ordered) - 1 else (hi + ordered[k + 1][1][0]) / 2.0
        widened[d] = (lo, hi)
    return widened


def extract_intervals(table, tol=INTERVAL_TIE_TOL):
    """Check that every stop label occupies one contiguous run of reachable pi.

    On success the runs become a ThresholdStrategy candidate; ties between
    actions may be resolved either way when judging contiguity.
    """
    report = StructureReport('intervals', True)
    entries_out = {}
    T = table.horizon
    for (t, messages), entries in table.groups().items():
        labels = _sticky_labels(entries, tol)
        pis = [e.pi for e in entries]
        report.points[(t, messages)] = list(zip(pis, labels))
        if t == T and BLANK in labels:
            report.violations.append(Violation(t, messages, 'continue chosen at t=T', tuple(pis)))
            continue
        positions = defaultdict(list)
        for k, d in enumerate(labels):
            positions[d].append(k)
        for d, ks in sorted(positions.items()):
            if d != BLANK and ks[-1] - ks[0] + 1 != len(ks):
                report.violations.append(Violation(
                    t, messages, 'stop{} region is not contiguous: {}'.format(
                        d, ' '.join(action_label(x) for x in labels)), tuple(pis[k] for k in ks)))
        entries_out[(t, messages)] = _regions(pis, labels, t == T)
    report.passed = not report.violations
    if report.passed:
        report.candidate = ThresholdStrategy(table.sensor, T, entries_out, name='extracted')
    return report


def verify_info_state_sufficiency(table, tol=SUFFICIENCY_TOL):
    """Histories sharing an information state must share an optimal action.

    Expects a table from the history program (group_info_states=False).
    """
    if getattr(table, 'table', None) is not None:
        table = table.table
    if table.grouped:
        raise ValueError("sufficiency needs a history value table, not a grouped one")
    report = StructureReport('sufficiency', True)
    by_state = defaultdict(list)
    for e in table:
        by_state[(e.t, e.messages, round(e.pi, PI_DECIMALS))].append(e)
    for (t, messages, pi), entries in sorted(by_state.items()):
        report.points.setdefault((t, messages), []).append((pi, entries[0].action))
        common = set.intersection(*(e.optimal_actions(tol) for e in entries))
        if not common:
            first = entries[0]
            other = next((e for e in entries[1:] if not (e.optimal_actions(tol) & first.optimal_actions(tol))),
                         entries[-1])
            report.violations.append(Violation(
                t, messages, 'histories {} and {} share no optimal action'.format(first.observations,
                                                                                  other.observations), (pi,)))
    report.passed = not report.violations
    return report
