"""The very-well-poised 6psi6 sum under a -> aq, e -> eq.

The Abel pair derived from the Gosper pair matches the classical one after
rescaling A so that B_0 = 1.
"""

from qtelescope import build_iteration, derive_abel_pair, format_term, lookup, same_term, synthesize_gosper_pair

rec = lookup("6psi6")
it = rec.find_iteration("chu")
rel = build_iteration(rec, "chu")
abel = derive_abel_pair(synthesize_gosper_pair(rel), rel)

print("B =", format_term(abel.B))
print("same B as the classical pair:", same_term(abel.B, it.B))
print("A equals classical A times", it.abel_scale, ":", same_term(abel.A, it.A * it.abel_scale))
