//! Companion matplotlib scripts that read the CSV outputs of a run directory.

use crate::commands::Command;
use crate::config::Format;

const STEADY: &str = r##"import csv, sys
import matplotlib.pyplot as plt

rows = list(csv.DictReader(open("steady.csv")))
best = {}
for r in rows:
    if r["status"] != "ok":
        continue
    j = float(r["j"])
    if j not in best or r["branch"] == "broken":
        best[j] = r
js = sorted(best)
plt.plot(js, [float(best[j]["abs_alpha"]) ** 2 for j in js], "o-", label="|<a>|^2")
plt.plot(js, [float(best[j]["n"]) for j in js], "s-", label="n")
plt.xlabel("J")
plt.legend()
plt.savefig(sys.argv[1] if len(sys.argv) > 1 else "steady.png", dpi=150)
"##;

const STABILITY: &str = r##"import csv, sys
import matplotlib.pyplot as plt

curves = {}
for r in csv.DictReader(open("dispersion.csv")):
    curves.setdefault(float(r["j"]), []).append((float(r["k"]), float(r["max_im_at_k"])))
for j, pts in sorted(curves.items()):
    plt.plot([p[0] for p in pts], [p[1] for p in pts], label=f"J={j:g}")
plt.axhline(0, color="k", lw=0.5)
plt.xlabel("k")
plt.ylabel("max Im omega_k")
plt.legend()
plt.savefig(sys.argv[1] if len(sys.argv) > 1 else "dispersion.png", dpi=150)
"##;

const DYNAMICS: &str = r##"import csv, sys
import matplotlib.pyplot as plt

fig, (ax1, ax2) = plt.subplots(2, 1, sharex=True)
for s in csv.DictReader(open("summary.csv")):
    if s["status"] != "ok":
        continue
    rows = list(csv.DictReader(open(f"traj_{s['index']}.csv")))
    t = [float(r["t"]) for r in rows]
    a = [abs(complex(float(r["re_alpha"]), float(r["im_alpha"]))) for r in rows]
    p = [float(r["purity"]) for r in rows]
    label = f"alpha0={float(s['re_alpha0']):g}"
    ax1.plot(t, a, label=label)
    ax2.plot(t, p, label=label)
ax1.set_xscale("log")
ax1.set_ylabel("|<a>(t)|")
ax2.set_ylabel("P(t)")
ax2.set_xlabel("t")
ax1.legend()
plt.savefig(sys.argv[1] if len(sys.argv) > 1 else "dynamics.png", dpi=150)
"##;

const SWEEP: &str = r##"import csv, sys
import numpy as np
import matplotlib.pyplot as plt

rows = list(csv.DictReader(open("phase.csv")))
js = sorted({float(r["j"]) for r in rows})
gs = sorted({float(r["g"]) for r in rows})
op = np.array([float(r["order_parameter"]) for r in rows]).reshape(len(gs), len(js))
mi = np.array([float(r["max_im_omega"]) for r in rows]).reshape(len(gs), len(js))
plt.pcolormesh(js, gs, op, shading="nearest")
plt.colorbar(label="|<a>|")
plt.contour(js, gs, mi, levels=[0.0], colors="w")
plt.xlabel("J")
plt.ylabel("G")
plt.savefig(sys.argv[1] if len(sys.argv) > 1 else "phase.png", dpi=150)
"##;

const WIGNER: &str = r##"import csv, sys
import numpy as np
import matplotlib.pyplot as plt

lines = [l for l in open("wigner.csv") if not l.startswith("#")]
rows = list(csv.DictReader(lines))
xs = sorted({float(r["re_z"]) for r in rows})
ys = sorted({float(r["im_z"]) for r in rows})
w = np.array([float(r["w"]) for r in rows]).reshape(len(ys), len(xs))
plt.pcolormesh(xs, ys, w, shading="nearest", cmap="RdBu_r")
plt.colorbar(label="W(z)")
plt.xlabel("Re z")
plt.ylabel("Im z")
plt.gca().set_aspect("equal")
plt.savefig(sys.argv[1] if len(sys.argv) > 1 else "wigner.png", dpi=150)
"##;

const FIT: &str = r##"import csv, sys
import numpy as np
import matplotlib.pyplot as plt

fits = {float(r["g"]): r for r in csv.DictReader(open("fit.csv")) if r["status"] == "ok"}
pts = {}
for r in csv.DictReader(open("fit_points.csv")):
    pts.setdefault(float(r["g"]), []).append((float(r["j_minus_jc"]), float(r["abs_alpha"])))
for g, p in sorted(pts.items()):
    x = np.array([q[0] for q in p])
    plt.loglog(x, [q[1] for q in p], "o", label=f"G={g:g}")
    f = fits.get(g)
    if f and f["beta"] != "nan":
        plt.loglog(x, float(f["amplitude"]) * x ** float(f["beta"]), "--")
plt.xlabel("J - J_c")
plt.ylabel("|<a>|")
plt.legend()
plt.savefig(sys.argv[1] if len(sys.argv) > 1 else "fit.png", dpi=150)
"##;

/// Script name and body; scripts read CSV only.
pub fn script(cmd: Command, format: Format) -> Option<(&'static str, &'static str)> {
    if format != Format::Csv {
        return None;
    }
    Some(match cmd {
        Command::Steady => ("plot_steady.py", STEADY),
        Command::Stability => ("plot_stability.py", STABILITY),
        Command::Dynamics => ("plot_dynamics.py", DYNAMICS),
        Command::Sweep => ("plot_sweep.py", SWEEP),
        Command::Wigner => ("plot_wigner.py", WIGNER),
        Command::Fit => ("plot_fit.py", FIT),
    })
}
