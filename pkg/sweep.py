import numpy as np
from koopdrift import datasets as ds, model as nn, trainer as tr, koopman as km
from koopdrift import model as mm
from koopdrift.evaluation import evaluate_weights, frozen_baseline
from koopdrift.errors import NumericalError

SEED = 0
results = {}
for kind in "ABCDEF":
    spec = ds.make_spec(kind)
    cfg = nn.net_config_for(spec.n_classes)
    tcfg = tr.train_config_for(spec.n_classes)
    W, state = tr.run_sequence(spec, cfg, tcfg, range(300), SEED)
    Wr, _ = tr.continue_sequence(spec, cfg, tcfg, state, range(300, 400), SEED)
    Wc, _ = tr.run_sequence(spec, cfg, tr.train_config_for(spec.n_classes, carry_moments=False), range(300), SEED)
    strategy = "detrend_fourier" if kind == "F" else "fourier"
    model = km.fit_koopman(W, period=100, strategy=strategy)
    z_last = km.encode_column(model, W.matrix[:, -1], model.t_last)
    zs = km.rollout(model, z_last, model.t_last, 100)
    th = km.reconstruct_weights(model, zs, 300)
    auto = evaluate_weights(spec, cfg, th, range(300, 400), SEED)
    frozen = evaluate_weights(spec, cfg, frozen_baseline(W, 100), range(300, 400), SEED, mode="frozen")
    retr = evaluate_weights(spec, cfg, Wr.matrix, range(300, 400), SEED, mode="retrained")
    train_accs = np.concatenate([W.accuracies, Wr.accuracies])
    ratio = Wc.epochs.mean() / W.epochs.mean()
    print(f"{kind}: trainmin {train_accs.min():.4f} ep_warm {W.epochs.mean():.0f} ep_cold {Wc.epochs.mean():.0f} ratio {ratio:.2f}")
    print(f"   p={model.dict_spec.p} rho_raw {model.spectral_radius_raw:.4f} rho {model.spectral_radius:.6f} strat {strategy}")
    print(f"   AUTO {auto.mean:.4f}/{auto.min:.4f} below90 {auto.steps_below_90} | FROZEN {frozen.mean:.4f} below90 {frozen.steps_below_90} | RETR {retr.mean:.4f}")
    results[kind] = dict(W=W, Wr=Wr, model=model, auto=auto, frozen=frozen, retr=retr, spec=spec, cfg=cfg)

# F extras: wd=0 ablation + raw fourier on standard F
spec = ds.make_spec("F")
cfg = nn.net_config_for(3)
W0, s0 = tr.run_sequence(spec, cfg, tr.train_config_for(3, lam_wd=0.0), range(300), SEED)
W0r, _ = tr.continue_sequence(spec, cfg, tr.train_config_for(3, lam_wd=0.0), s0, range(300, 400), SEED)
M0 = np.hstack([W0.matrix, W0r.matrix])
sl = mm.layer_slices(cfg)
frac0 = tr.trend_fraction(M0[sl["layer2"]], slice(None), 0.01)
Mwd = np.hstack([results["F"]["W"].matrix, results["F"]["Wr"].matrix])
fracwd = tr.trend_fraction(Mwd[sl["layer2"]], slice(None), 0.01)
print(f"F wd0: L2 frac {frac0:.2f} (wd=1e-3: {fracwd:.2f})")
for strat in ("fourier", "detrend_fourier"):
    m0 = km.fit_koopman(W0, period=100, strategy=strat)
    z0 = km.encode_column(m0, W0.matrix[:, -1], m0.t_last)
    try:
        zs0 = km.rollout(m0, z0, m0.t_last, 100)
        a0 = evaluate_weights(spec, cfg, km.reconstruct_weights(m0, zs0, 300), range(300, 400), SEED)
        res = f"auto {a0.mean:.4f}/{a0.min:.4f}"
    except NumericalError as e:
        res = f"DIVERGED ({e})"
    print(f"F wd0 {strat}: rho_raw {m0.spectral_radius_raw:.4f} {res}")
m_raw = km.fit_koopman(results["F"]["W"], period=100, strategy="fourier")
zr = km.encode_column(m_raw, results["F"]["W"].matrix[:, -1], m_raw.t_last)
try:
    zsr = km.rollout(m_raw, zr, m_raw.t_last, 100)
    ar = evaluate_weights(spec, cfg, km.reconstruct_weights(m_raw, zsr, 300), range(300, 400), SEED)
    res = f"auto {ar.mean:.4f}/{ar.min:.4f}"
except NumericalError as e:
    res = f"DIVERGED ({e})"
print(f"F wd=1e-3 RAW fourier: rho_raw {m_raw.spectral_radius_raw:.4f} {res}")

# coupling ordinals
from koopdrift.coupling import coupling_report
for kind in "ABCDE":
    r = results[kind]
    rep = coupling_report(r["W"], r["cfg"], bins=8)
    print(f"{kind} coupling: dcor_mean {rep.dcor_mean_offdiag:.3f} frac>.5 {rep.dcor_frac_above_half:.2f} te_ratio {rep.te_ratio_l1_l2:.2f}")
