"""huntforge: an evidential threat-hunting engine.

Telemetry goes in one end; what comes out the other end is a journaled
hunt: detections, threat hypotheses, verifier verdicts, promoted facts
with provenance chains, and cost-ranked response recommendations.
"""

__version__ = "0.1.0"

from .model import (  # noqa: F401
    ActionRecommendation,
    Decision,
    EvidenceKind,
    EvidenceRef,
    Hypothesis,
    HypKind,
    HypStatus,
    Predicate,
    RecStatus,
    Verdict,
    pred,
)
from .state import HuntConfig, HuntState, init_hunt  # noqa: F401
from .engine import pending_work, promote, replay, run, step_once  # noqa: F401
