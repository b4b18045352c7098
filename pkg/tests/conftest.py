import sys
from pathlib import Path

from hypothesis import HealthCheck, settings

# jit warm-up on the first solver call breaks per-example deadlines
settings.register_profile(
    "jit",
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("jit")

sys.path.insert(0, str(Path(__file__).parent))
