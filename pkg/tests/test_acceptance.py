"""Acceptance suite: one test per acceptance criterion, at pinned tolerances.

Each test prints an `ACCEPTANCE <id>: PASS|FAIL` line before asserting, so a
plain `pytest tests/test_acceptance.py -v -s` reads as the acceptance report.

Known honest failures (see the analysis in the repo notes): the TWAP fee
table (criterion 4), the expected-payoff table (criterion 6) and the cash
terminal-inventory threshold (criterion 7f) assert values that the model, as
written, does not produce; the tests state the required values faithfully and
are left red rather than loosened.
"""
import time

import numpy as np

import execfees as ef

from conftest import contract

Q0, S0 = 0.5, 45.0
NODE = (50, 75)

TABLE_FEES = {"linear_physical": 45.0029, "linear_cash": 45.0130,
              "collar_physical": 45.0042, "collar_cash": 45.0078}
TABLE_REGULATORY = {
    1.0: [45.0020, 45.0018, 45.0014, 45.0010, 45.0007],
    5.0: [45.0130, 45.0112, 45.0081, 45.0050, 45.0029],
}
P_LIST = [0.0, 0.2, 0.5, 0.8, 1.0]
TABLE_TWAP = {"physical": 0.4997, "cash": 0.4999}
TABLE_R001 = {"linear_physical": 44.6504, "linear_cash": 44.6191,
              "collar_physical": 44.5408, "collar_cash": 44.4986}
TABLE_SIGMA7 = {"linear_physical": 45.0040, "linear_cash": 45.0185,
                "collar_physical": 45.0079, "collar_cash": 45.0086}
TABLE_ALPHA_CASH = {0.002: 45.0046, 0.02: 45.0099, 0.2: 45.0130}
TABLE_STATARB = {"linear_physical": -0.0137, "linear_cash": 0.0530,
                 "collar_physical": -0.0101, "collar_cash": 0.0527}
TABLE_STATARB_TWAP = {"twap_physical": 0.5117, "twap_cash": 0.5631}
SIGN_PATTERN = {"linear_physical": -1, "linear_cash": +1,
                "collar_physical": -1, "collar_cash": +1,
                "twap_physical": +1, "twap_cash": +1}


def _report(cid, ok, detail):
    print(f"\nACCEPTANCE {cid}: {'PASS' if ok else 'FAIL'} - {detail}")
    assert ok, f"criterion {cid}: {detail}"


def test_criterion_1_closed_form_oracle(params, grid):
    t0 = time.time()
    phys = ef.solve_fee_surface(contract("linear_physical", params), params, grid)
    t_phys = time.time() - t0
    t0 = time.time()
    cash = ef.solve_fee_surface(contract("linear_cash", params), params, grid)
    t_cash = time.time() - t0
    i0, j0 = NODE
    d_phys = abs(phys.values[0, i0, j0] - ef.fee_physical_closed(0.0, Q0, S0, params))
    d_cash = abs(cash.values[0, i0, j0] - ef.fee_trs_closed(0.0, Q0, S0, params))
    ok = d_phys <= 1e-3 and d_cash <= 1e-3 and max(t_phys, t_cash) < 30.0
    _report(1, ok, f"|pde-closed| phys={d_phys:.2e} cash={d_cash:.2e}, "
                   f"solve times {t_phys:.1f}s/{t_cash:.1f}s")


def test_criterion_2_fee_table(surfaces):
    i0, j0 = NODE
    diffs = {fam: abs(surfaces[fam].values[0, i0, j0] - ref)
             for fam, ref in TABLE_FEES.items()}
    ok = all(d <= 2e-3 for d in diffs.values())
    _report(2, ok, "fee-table deviations " +
            " ".join(f"{f}={d:.1e}" for f, d in diffs.items()))


def test_criterion_3_regulatory_table(params, grid):
    worst = 0.0
    monotone = True
    for sigma, refs in TABLE_REGULATORY.items():
        pars = params.replace(sigma=sigma)
        fees = []
        for p in P_LIST:
            res = ef.solve_regulatory(ef.RegulatorySpec(p=p, tau=0.5), pars, grid)
            fees.append(res.pre.values[0, NODE[0], NODE[1]])
        worst = max(worst, max(abs(f - r) for f, r in zip(fees, refs)))
        monotone &= all(fees[k] > fees[k + 1] for k in range(len(fees) - 1))
    ok = worst <= 2e-3 and monotone
    _report(3, ok, f"max deviation {worst:.1e}, strictly decreasing in p: {monotone}")


def test_criterion_4_twap_fee_table(twap_surfaces):
    i0, j0 = NODE
    diffs = {side: abs(twap_surfaces[side].values[0, i0, j0] - ref)
             for side, ref in TABLE_TWAP.items()}
    ok = all(d <= 1e-3 for d in diffs.values())
    _report(4, ok, "transformed-equation fees "
            + " ".join(f"{s}={twap_surfaces[s].values[0, i0, j0]:.4f}"
                       f" (table {TABLE_TWAP[s]})" for s in diffs))


def test_criterion_5_sensitivity_rows(params, grid):
    diffs = {}
    pars_r = params.replace(r=0.01)
    for fam, ref in TABLE_R001.items():
        s = ef.solve_fee_surface(contract(fam, pars_r), pars_r, grid)
        diffs[f"r=0.01 {fam}"] = abs(s.values[0, NODE[0], NODE[1]] - ref)
    pars_s = params.replace(sigma=7.0)
    for fam, ref in TABLE_SIGMA7.items():
        s = ef.solve_fee_surface(contract(fam, pars_s), pars_s, grid)
        diffs[f"sigma=7 {fam}"] = abs(s.values[0, NODE[0], NODE[1]] - ref)
    for alpha, ref in TABLE_ALPHA_CASH.items():
        pars_a = params.replace(alpha=alpha)
        s = ef.solve_fee_surface(contract("linear_cash", pars_a), pars_a, grid)
        diffs[f"alpha={alpha} cash"] = abs(s.values[0, NODE[0], NODE[1]] - ref)
    worst = max(diffs.values())
    ok = worst <= 5e-3
    _report(5, ok, f"worst deviation {worst:.1e} "
                   f"({max(diffs, key=diffs.get)})")


def test_criterion_6_expected_payoff_tables(params, grid):
    cfg = ef.SimConfig(n_paths=100_000, seed=20240901)
    t0 = time.time()
    rows = {}
    for fam, ref in {**TABLE_STATARB, **TABLE_STATARB_TWAP}.items():
        est = ef.expected_payoff_metric(contract(fam, params), params, grid, cfg)
        rows[fam] = (est.estimate, est.stderr, ref)
    elapsed = time.time() - t0
    within = {f: abs(e - ref) <= 3 * se for f, (e, se, ref) in rows.items()}
    signs = {f: np.sign(e) == SIGN_PATTERN[f] for f, (e, _, _) in rows.items()}
    ok = all(within.values()) and all(signs.values()) and elapsed < 300.0
    detail = "; ".join(f"{f}: est={e:+.4f}+-{se:.4f} ref={ref:+.4f} "
                       f"within3se={within[f]} sign_ok={signs[f]}"
                       for f, (e, se, ref) in rows.items())
    _report(6, ok, f"{detail}; runtime {elapsed:.0f}s")


def test_criterion_7a_terminal_exactness(params, grid, surfaces):
    S = grid.s_nodes()[:, None]; q = grid.q_nodes()[None, :]
    ok = all(np.array_equal(surf.values[-1],
                            ef.terminal_fee(contract(fam, params), q, S, params)
                            + np.zeros_like(surf.values[-1]))
             for fam, surf in surfaces.items())
    _report("7a", ok, "terminal layer reproduces Pi(S)+L(q) bit-for-bit")


def test_criterion_7b_control_clamping(controls, params):
    worst = max(np.abs(c.values).max() for c in controls.values())
    _report("7b", worst <= params.C, f"max |v*| = {worst:.6f} (bound {params.C})")


def test_criterion_7c_fee_monotonicity(surfaces):
    worst = min(np.diff(s.values[0], axis=0).min() for s in surfaces.values())
    _report("7c", worst >= 0.0, f"min fee increment along S at t=0: {worst:.2e}")


def test_criterion_7d_ode_residuals(params):
    d = 1e-5
    worst = 0.0
    for t in np.linspace(0.05, 0.85, 9):
        h2 = ef.h_quadratic(t, params)
        h2p = (ef.h_quadratic(t + d, params) - ef.h_quadratic(t - d, params)) / (2 * d)
        worst = max(worst, abs(-h2p - 0.5 * params.sigma**2 * params.gamma
                               + (params.b - 2 * h2) ** 2 / (4 * params.l)))
        h1 = ef.trs_h1(t, params)
        h1p = (ef.trs_h1(t + d, params) - ef.trs_h1(t - d, params)) / (2 * d)
        worst = max(worst, abs(-h1p + params.sigma**2 * params.gamma * params.N
                               - (params.b - 2 * h2)
                               * (h1 + params.b * params.N) / (2 * params.l)))
    _report("7d", worst <= 1e-6, f"max Riccati/linear ODE residual {worst:.1e}")


def _zero_noise_path(fam, params, controls):
    cfg = ef.SimConfig(n_paths=1, n_steps=1000, seed=0)
    return ef.simulate_path(controls[fam], params, cfg, np.zeros((1, 1000)))


def test_criterion_7e_deterministic_sign_changes(params, controls):
    changes = {}
    for fam in ("linear_physical", "linear_cash"):
        v = _zero_noise_path(fam, params, controls).v
        live = np.abs(v) > 1e-3 * np.abs(v).max()
        s = np.sign(v[live])
        changes[fam] = int(np.sum(s[1:] != s[:-1]))
    ok = changes["linear_physical"] == 0 and changes["linear_cash"] == 1
    _report("7e", ok, f"sign changes on the zero-noise path: {changes}")


def test_criterion_7f_deterministic_inventory_targets(params, controls):
    # NOTE: the 0.02 threshold is not attainable for the cash contract: the
    # exact optimal unwind under the baseline penalty leaves Q(T) ~ 0.052
    # (verified against the closed-form control ODE); kept as stated.
    q_phys = _zero_noise_path("linear_physical", params, controls).Q[-1]
    q_cash = _zero_noise_path("linear_cash", params, controls).Q[-1]
    ok = abs(q_phys - params.N) <= 0.02 and abs(q_cash) <= 0.02
    _report("7f", ok, f"zero-noise terminal inventory: physical={q_phys:.4f} "
                      f"(target 1), cash={q_cash:.4f} (target 0)")


def test_criterion_7g_grid_refinement(params, grid, surfaces, twap_surfaces):
    fine = grid.refine(2)
    i0, j0 = NODE
    i1, j1 = 2 * i0, 2 * j0
    worst_fee, worst_twap = 0.0, 0.0
    for fam, surf in surfaces.items():
        refined = ef.solve_fee_surface(contract(fam, params), params, fine)
        worst_fee = max(worst_fee,
                        abs(refined.values[0, i1, j1] - surf.values[0, i0, j0]))
    for side, surf in twap_surfaces.items():
        refined = ef.solve_twap(side, params, fine)
        worst_twap = max(worst_twap,
                         abs(refined.values[0, i1, j1] - surf.values[0, i0, j0]))
    ok = worst_fee < 2e-3 and worst_twap < 1e-3
    _report("7g", ok, f"halved spacings move fees by {worst_fee:.1e} "
                      f"(contracts), {worst_twap:.1e} (TWAP)")


def test_criterion_8_reproduce_all_byte_identical(tmp_path):
    from execfees.cli import main
    cfg = tmp_path / "exp.yaml"
    cfg.write_text("grid:\n  I: 40\n  J: 40\n  n_steps: 400\n"
                   "sim: {n_paths: 400, n_steps: 400, seed: 12345}\n")
    outs = []
    for d in ("run1", "run2"):
        out = tmp_path / d
        assert main(["reproduce-all", "--config", str(cfg), "--out", str(out),
                     "--seed", "12345"]) == 0
        outs.append(out)
    names = sorted(p.name for p in outs[0].iterdir())
    same = all((outs[0] / n).read_bytes() == (outs[1] / n).read_bytes()
               for n in names)
    _report(8, same and len(names) >= 8,
            f"{len(names)} artifacts byte-identical across two runs: {same}")
