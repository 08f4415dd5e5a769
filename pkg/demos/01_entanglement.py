"""How much entanglement does a Larmor-precessing ensemble build up with light?

We propagate vacuum through the scattering map, trace out the light and look
at the entropy left on the atoms. The same is done for the zero-field QND
coupling at equal kappa. The symplectic eigenvalue of the atoms is simply
1 + kappa^2/2 in the first case and sqrt(1 + kappa^2) in the second, so the
precessing ensemble always ends up more entangled.
"""

import numpy as np

from larmor_teleport import CANONICAL_LAYOUT, apply_map, entropy_vn, interaction_map, qnd_map, reduce, vacuum_state
from larmor_teleport.scattering_model import QND_LAYOUT


def atoms_after(lmap, layout):
    return reduce(apply_map(vacuum_state(layout), lmap), ["A"])


print(f"{'kappa':>6} {'E_larmor':>9} {'E_qnd':>9}")
for kappa in np.arange(0.0, 3.01, 0.25):
    e = entropy_vn(atoms_after(interaction_map(kappa), CANONICAL_LAYOUT))
    e_qnd = entropy_vn(atoms_after(qnd_map(kappa), QND_LAYOUT))
    print(f"{kappa:6.2f} {e:9.4f} {e_qnd:9.4f}")
