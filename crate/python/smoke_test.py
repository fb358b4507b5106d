"""Smoke test for the prgov Python bindings."""

import json

import prgov


def main():
    model = prgov.Model.one_link()
    assert model.n_states == 2 and model.n_inputs == 1
    assert model.spectral_radius() < 1.0

    limits = prgov.Polytope.symmetric_box([45.0])
    standard = prgov.AdmissibleSet.standard(model, limits)
    lifted = prgov.AdmissibleSet.lifted(model, 25, limits)
    print(standard, lifted)
    assert lifted.horizons == [25]
    assert standard.contains([0.0, 0.0], [10.0])
    assert not standard.contains([0.0, 0.0], [100.0])

    restored = prgov.AdmissibleSet.from_json(lifted.to_json())
    assert restored.n_rows == lifted.n_rows and restored.t_star == lifted.t_star

    # Closed loop with the preview governor under a constant target.
    n = 25
    gov = prgov.Governor.preview(lifted, [0.0, 0.0], [0.0] * (n + 1))
    x = [0.0, 0.0]
    worst = 0.0
    for _ in range(300):
        out = gov.step(x, [44.0] * (n + 1))
        assert 0.0 <= out.kappa <= 1.0
        x, y = model.step(x, out.v)
        worst = max(worst, abs(y[0]))
    assert worst <= 45.0 + 1e-6, worst
    assert abs(out.v[0] - 44.0) < 1e-6, out.v

    multi = prgov.Governor.multi_n(lifted, list(range(n + 1)), [0.0, 0.0], [0.0] * (n + 1))
    assert multi.kind == "multi_n"
    step = multi.step([0.0, 0.0], [30.0] * (n + 1))
    assert step.selected is not None and len(step.kappas) == n + 1

    assert prgov.explicit_kappa([2.0, 0.5], [1.0, 1.0]) == 0.5
    assert prgov.explicit_kappa([1.0], [-1.0]) == 0.0

    names = prgov.scenario_names()
    assert "one_link" in names and "two_link" in names
    assert prgov.scenario("one_link")["steps"] == 150

    srg = prgov.run_scenario("one_link", {"kind": "srg"}, seed=1)
    prg = prgov.run_scenario("one_link", json.dumps({"kind": "prg", "horizon": 25}), seed=1)
    assert srg.summary["violations"] == 0 and prg.summary["violations"] == 0
    assert prg.summary["tracking_gap"] < srg.summary["tracking_gap"]
    assert len(prg) == 150 and prg.to_csv().startswith("t,r_1,v_1,y_1,kappa,step_time_ns")

    rows = prgov.timing_comparison("one_link", [{"kind": "srg"}, {"kind": "prg", "horizon": 25}], repeats=2)
    assert [r["governor"] for r in rows] == ["srg", "prg_n25"]

    try:
        prgov.run_scenario("no_such_scenario", {"kind": "srg"})
    except prgov.PrgovError as e:
        assert "known scenarios" in str(e)
    else:
        raise AssertionError("unknown scenario accepted")

    print("smoke test passed")


if __name__ == "__main__":
    main()
