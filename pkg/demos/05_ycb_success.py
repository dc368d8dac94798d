"""
YCB success rates: micro against macro
======================================

Micro-averaging weights every attempt, macro-averaging weights every object.
"""

from cegb.metrics import classify_attempt, ycb_aggregate
from cegb.model import AttemptEvents, GraspAttempt
from cegb.synth import gen_ycb

# An attempt succeeds when the object is lifted within 3 s, held 3 s
# without slip, and everything finishes within 10 s.
for ev in [
    AttemptEvents(0.0, 2.1, 3.0, False, 6.0),
    AttemptEvents(0.0, 3.4, 3.0, False, 7.0),
    AttemptEvents(0.0, 1.0, 3.0, True, 5.0),
]:
    outcome, reason = classify_attempt(GraspAttempt("mug", 1, 1, ev))
    print(ev.t_lift_5cm, ev.slip_during_hold, "->", outcome.value, reason.value)

# One easy object with two poses, one hard object with a single pose.
session, truth = gen_ycb({("mug", 1): 0.9, ("mug", 2): 0.7, ("spoon", 1): 0.2}, a=10, seed=3)
r = ycb_aggregate(session.attempts)
print(f"micro {r.micro.point:.2f} {r.micro.wilson95}")
print(f"macro {r.macro.point:.2f} {r.macro.ci95}")
print("generator counts:", truth.ycb["successes"], "/", truth.ycb["trials"])
