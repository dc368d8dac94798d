"""
Energy per grasp phase
======================

Integrate a logged power trace over grasp, hold and release, with the
phases either given or inferred from the power profile.
"""

from cegb.metrics import energy_metrics
from cegb.model import SampledTrace
from cegb.signal import integrate_power, segment_phases
from cegb.synth import gen_energy

# %%
# A 100 Hz voltage/current log: 2 s grasp, 10 s hold, 2 s release.
trace, marks, truth = gen_energy((1.295, 0.15, 0.955), (2.0, 10.0, 2.0), rate=100.0, voltage=7.4)
print("constructed energies:", truth.energy)

# %%
# Without marks, phases come from the power profile.
unmarked = SampledTrace(trace.kind, trace.t, trace.values)
for m in segment_phases(unmarked):
    print(f"{m.phase.value:8s} {m.t_start:6.2f} .. {m.t_end:6.2f} s  {integrate_power(trace, m.t_start, m.t_end):.3f} J")

# %%
# Energy-to-weight uses the object mass in grams.
result = energy_metrics([(trace, marks, 600.0)])
print(f"E_hold10 {result.E_hold10:.3f} J")
print(f"grasp energy-to-weight {result.energy_to_weight_grasp:.3e} J/g")
print(f"cycle energy-to-weight {result.energy_to_weight_cycle:.3e} J/g")
