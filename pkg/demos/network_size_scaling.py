"""How the synchronization norm scales with network size.

On path networks the droop norm grows roughly linearly with n (loosely
coupled strings swing badly), while DAPI with any fixed gamma > 0 stays
below the size-independent ceiling (gamma d + q) / (2 d).  Complete
graphs stay flat for every controller.  The log-log plot makes both
regimes obvious.

Writes network_size_scaling.png next to this script.
"""

import os

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from gridcoher import (
    Dapi,
    Droop,
    build_laplacian,
    make_graph,
    scaling_bound_dapi,
    spectrum,
    sync_norm_closed_form,
)

sizes = np.array([4, 8, 16, 32, 64, 128, 256])
gamma, q, d = 0.3, 1.0, 1.0
bound = scaling_bound_dapi(gamma, d, q)

rows = {"path droop": [], "path DAPI": [], "complete droop": [], "complete DAPI": []}
for n in sizes:
    for fam in ("path", "complete"):
        spec = spectrum(build_laplacian(make_graph(fam, int(n))))
        rows[f"{fam} droop"].append(sync_norm_closed_form(spec, 1.0, d, Droop()).value)
        rows[f"{fam} DAPI"].append(
            sync_norm_closed_form(spec, 1.0, d, Dapi(q=q, gamma=gamma)).value
        )

print(f"{'n':>5s}" + "".join(f" {k:>16s}" for k in rows))
for i, n in enumerate(sizes):
    print(f"{n:5d}" + "".join(f" {rows[k][i]:16.6f}" for k in rows))
print(f"\nDAPI ceiling (gamma d + q)/(2 d) = {bound}")

fig, ax = plt.subplots(figsize=(6.5, 4.5))
styles = {"path droop": "o-", "path DAPI": "s-", "complete droop": "o--", "complete DAPI": "s--"}
for k, vals in rows.items():
    ax.loglog(sizes, vals, styles[k], label=k, ms=4)
ax.axhline(bound, color="gray", lw=1.0, ls=":", label="DAPI ceiling")
ax.set_xlabel("network size n")
ax.set_ylabel("synchronization norm")
ax.legend(fontsize=8)
ax.set_title(f"gamma={gamma}, q={q}, m=d=1")
fig.tight_layout()

out = os.path.join(os.path.dirname(os.path.abspath(__file__)), "network_size_scaling.png")
fig.savefig(out, dpi=130)
print(f"wrote {out}")
