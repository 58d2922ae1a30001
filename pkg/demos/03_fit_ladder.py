"""Fit a synthetic epidemic-like curve and watch the model ladder climb.

Run:  python3 demos/03_fit_ladder.py
"""
from hinderfit import GrowthModel, HinderingWeights, MultiTerm, SynthConfig, run_ladder, synth_generate
from hinderfit.kernel import family_label

truth = GrowthModel(MultiTerm(HinderingWeights({1: 0.5, 8: 0.5})), 0.2, 1000.0, 30.0)
ds = synth_generate(SynthConfig(truth, 0.0, 150.0, 200, 0.02, seed=0))
ladder = run_ladder(ds.series)

print("candidates")
for c in ladder.candidates:
    m = c.model
    print(f"  {family_label(m.family):>22}  g_u={m.g_u:.4f}  Q_h={m.Q_h:9.2f}  t_h={m.t_h:7.2f}  fvu={c.fvu:.2e}")

print("\nnested F-tests")
for (restricted, full), test in zip(ladder.f_labels, ladder.f_chain):
    verdict = "keep" if test.reject_null else "stop"
    print(f"  {restricted:>18} -> {full:<22} F={test.F:10.3g}  p={test.p_value:.3g}  {verdict}")

chosen = ladder.chosen.model
print(f"\nchosen {family_label(chosen.family)}: g_u {chosen.g_u:.4f} (true 0.2), Q_h {chosen.Q_h:.1f} (true 1000)")
