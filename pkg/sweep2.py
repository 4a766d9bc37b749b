import numpy as np
from koopdrift import datasets as ds, model as nn, trainer as tr, koopman as km
from koopdrift import model as mm
from koopdrift.evaluation import evaluate_weights, frozen_baseline
from koopdrift.coupling import coupling_report
from koopdrift.errors import NumericalError

SEED = 0

# B with carrier drift
spec = ds.make_spec("B")
cfg = nn.net_config_for(2); tcfg = tr.train_config_for(2)
W, state = tr.run_sequence(spec, cfg, tcfg, range(300), SEED)
model = km.fit_koopman(W, period=100, strategy="fourier")
z = km.encode_column(model, W.matrix[:, -1], model.t_last)
zs = km.rollout(model, z, model.t_last, 100)
auto = evaluate_weights(spec, cfg, km.reconstruct_weights(model, zs, 300), range(300, 400), SEED)
frozen = evaluate_weights(spec, cfg, frozen_baseline(W, 100), range(300, 400), SEED, mode="frozen")
rep = coupling_report(W, cfg, 8)
print(f"B carrier: trainmin {W.accuracies.min():.4f} p={model.dict_spec.p} AUTO {auto.mean:.4f}/{auto.min:.4f}"
      f" FROZEN {frozen.mean:.4f}/{frozen.steps_below_90} dcor {rep.dcor_mean_offdiag:.3f}")

# D noise scan: p and TE ratio
for sigma in (0.25, 0.35):
    spec = ds.make_spec("D", noise_std=sigma)
    cfg3 = nn.net_config_for(3)
    W3, st3 = tr.run_sequence(spec, cfg3, tr.train_config_for(3), range(300), SEED)
    m3 = km.fit_koopman(W3, period=100, strategy="fourier")
    z3 = km.encode_column(m3, W3.matrix[:, -1], m3.t_last)
    zs3 = km.rollout(m3, z3, m3.t_last, 100)
    a3 = evaluate_weights(spec, cfg3, km.reconstruct_weights(m3, zs3, 300), range(300, 400), SEED)
    line = f"D s{sigma}: trainmin {W3.accuracies.min():.4f} p={m3.dict_spec.p} AUTO {a3.mean:.4f}/{a3.min:.4f} te_ratio:"
    for bins in (4, 6, 8, 12):
        r3 = coupling_report(W3, cfg3, bins)
        line += f" b{bins}={r3.te_ratio_l1_l2:.2f}"
    r8 = coupling_report(W3, cfg3, 8)
    print(line + f" dcor {r8.dcor_mean_offdiag:.3f}")

# F noise scan
for sigma in (0.45, 0.5):
    spec = ds.make_spec("F", noise_std=sigma)
    cfg3 = nn.net_config_for(3)
    # wd on
    Wf, stf = tr.run_sequence(spec, cfg3, tr.train_config_for(3), range(300), SEED)
    Wfr, _ = tr.continue_sequence(spec, cfg3, tr.train_config_for(3), stf, range(300, 400), SEED)
    mfd = km.fit_koopman(Wf, period=100, strategy="detrend_fourier")
    zf = km.encode_column(mfd, Wf.matrix[:, -1], mfd.t_last)
    zsf = km.rollout(mfd, zf, mfd.t_last, 100)
    af = evaluate_weights(spec, cfg3, km.reconstruct_weights(mfd, zsf, 300), range(300, 400), SEED)
    mfr = km.fit_koopman(Wf, period=100, strategy="fourier")
    zr = km.encode_column(mfr, Wf.matrix[:, -1], mfr.t_last)
    try:
        zsr = km.rollout(mfr, zr, mfr.t_last, 100)
        ar = evaluate_weights(spec, cfg3, km.reconstruct_weights(mfr, zsr, 300), range(300, 400), SEED)
        raw_res = f"{ar.mean:.4f}"
    except NumericalError:
        raw_res = "DIV"
    tm = min(Wf.accuracies.min(), Wfr.accuracies.min())
    print(f"F s{sigma} wd3: trainmin {tm:.4f} detrend auto {af.mean:.4f}/{af.min:.4f} (below90 {af.steps_below_90})"
          f" | raw fourier rho {mfr.spectral_radius_raw:.3f} auto {raw_res}")
    # wd off
    W0, s0 = tr.run_sequence(spec, cfg3, tr.train_config_for(3, lam_wd=0.0), range(300), SEED)
    W0r, _ = tr.continue_sequence(spec, cfg3, tr.train_config_for(3, lam_wd=0.0), s0, range(300, 400), SEED)
    M0 = np.hstack([W0.matrix, W0r.matrix])
    sl = mm.layer_slices(cfg3)
    frac = tr.trend_fraction(M0[sl["layer2"]], slice(None), 0.01)
    out = [f"F s{sigma} wd0: L2frac {frac:.2f}"]
    for strat in ("fourier", "detrend_fourier"):
        m0 = km.fit_koopman(W0, period=100, strategy=strat)
        z0 = km.encode_column(m0, W0.matrix[:, -1], m0.t_last)
        try:
            zs0 = km.rollout(m0, z0, m0.t_last, 100)
            a0 = evaluate_weights(spec, cfg3, km.reconstruct_weights(m0, zs0, 300), range(300, 400), SEED)
            out.append(f"{strat[:4]} rho {m0.spectral_radius_raw:.3f} auto {a0.mean:.4f}")
        except NumericalError:
            out.append(f"{strat[:4]} rho {m0.spectral_radius_raw:.3f} DIV")
    print(" | ".join(out))
