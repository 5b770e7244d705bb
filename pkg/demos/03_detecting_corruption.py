"""Corrupt an oracle at a single input and watch the engine refuse it.

The corruption moves one output by 1e-3.  Depending on where it lands the
engine either reports a structural inconsistency or a residual far above
the tolerance, and names the input that exposed it.
"""

import numpy as np

from tingley_lab import OracleInconsistent, random_instance, reconstruct
from tingley_lab.reconstruction import consistency_check
from tingley_lab.isometry_factory import perturb_oracle

for section in (2, 3):
    inst = random_instance(section, size=4, seed=7)
    clean = reconstruct(inst.oracle)
    print(f"section {section}: clean oracle ok={clean.ok}, worst residual {clean.worst_residual:.2e}")
    for j in range(4):
        site = np.zeros(4, dtype=complex)
        site[j] = 1
        bad = perturb_oracle(inst.oracle, site, 1e-3)
        try:
            report = reconstruct(bad)
        except OracleInconsistent as exc:
            print(f"  corrupted at coordinate {j}: inconsistent ({exc}), residual {exc.residual:.2e}")
            continue
        check = consistency_check(bad, report)
        worst = max(report.worst_residual, check["residual"])
        exposed = int(np.argmax(np.abs(check["witness"])))
        print(f"  corrupted at coordinate {j}: ok={report.ok}, residual {worst:.2e}, exposed by the unit vector at {exposed}")
