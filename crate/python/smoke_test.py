"""Smoke test for the fsta Python module: build it with
`pip install --no-build-isolation ./crates/py`, then run this file."""

import fsta


def main():
    inst = fsta.Instance.generate("cvrp", 60, 40.0, seed=3)
    assert inst.n_customers == 60
    assert fsta.Instance.from_doc(inst.to_doc()).to_doc() == inst.to_doc()

    start = inst.sweep()
    feasible, problems = inst.check(start)
    assert feasible, problems
    f0 = inst.objective(start)

    unstable = fsta.detect(inst, start, "random:0.3", seed=1)
    assert set(unstable) <= set(start.edges())
    red = fsta.reduce(inst, start, unstable)
    assert 0.0 < red.size_ratio <= 1.0
    assert red.recover(red.start) == start
    gap = f0 - red.reduced_objective(red.start) - red.objective_offset
    assert abs(gap) < 1e-9, gap
    better = red.solve(moves=300, seed=2)
    assert inst.check(better)[0] and inst.objective(better) <= f0 + 1e-9

    sol, stats = fsta.run_fsta(inst, start, segmenter="oracle:200", moves_per_iter=200, iters=5, seed=4)
    assert stats["iterations"] == 5 and stats["final_objective"] <= f0 + 1e-9
    assert len(stats["objectives"]) == 5
    plain, pstats = fsta.run_plain(inst, start, moves_per_iter=200, iters=5, seed=4)
    assert inst.check(plain)[0] and inst.check(sol)[0]

    small = fsta.Instance.generate("vrptw", 7, 30.0, seed=5)
    rep = fsta.verify_theorem(small, small.sweep(), fsta.detect(small, small.sweep(), "random:0.5"))
    assert rep["passed"] and rep["exhaustive"]

    try:
        fsta.detect(inst, start, "bogus")
    except ValueError:
        pass
    else:
        raise AssertionError("bad policy accepted")

    print(f"ok: start {f0:.4f}, plain {pstats['final_objective']:.4f}, fsta {stats['final_objective']:.4f}")


if __name__ == "__main__":
    main()
