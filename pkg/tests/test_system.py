import numpy as np
import pytest

from ctdispatch import DomainError, SystemModel, assemble


def test_single_generator_no_lines():
    sys_ = SystemModel.without_lines([1], [10], [0], [1], [-1], n_loads=2)
    stk = assemble(sys_)
    assert stk.A.tolist() == [[1], [-1]]
    assert stk.B.shape == (2, 2) and not stk.B.any()
    assert stk.a.tolist() == [10, 0]


def test_line_rows_unfold_the_absolute_value():
    sys_ = SystemModel([1], [10], [0], [1], [-1], [3], [[1]], [[-0.5]])
    stk = assemble(sys_)
    assert stk.A[2:].tolist() == [[1], [-1]]
    assert stk.B[2:].tolist() == [[-0.5], [0.5]]
    assert stk.a[2:].tolist() == [3, 3]
    assert stk.labels[2].startswith("flow-max")


def test_stacked_rows_equal_direct_checks(rng):
    for _ in range(20):
        G, D, L = rng.integers(1, 4, 3)
        sys_ = SystemModel(rng.uniform(0, 5, G), rng.uniform(5, 10, G), rng.uniform(0, 5, G),
                           rng.uniform(0, 2, G), -rng.uniform(0, 2, G), rng.uniform(1, 5, L),
                           rng.normal(size=(L, G)), rng.normal(size=(L, D)))
        stk = assemble(sys_)
        for _ in range(100):
            x = rng.uniform(-2, 12, G)
            xi = rng.uniform(-3, 3, D)
            flow = sys_.ptdf_gen @ x + sys_.ptdf_load @ xi
            direct = (np.all(x <= sys_.x_max) and np.all(x >= sys_.x_min)
                      and np.all(np.abs(flow) <= sys_.f_max))
            assert direct == bool(np.all(stk.A @ x + stk.B @ xi <= stk.a))


@pytest.mark.parametrize("kw, msg", [
    (dict(x_min=[11]), "x_min"),
    (dict(cost=[-1]), "cost"),
    (dict(ramp_down=[1]), "ramp"),
])
def test_validation(kw, msg):
    args = dict(cost=[1], x_max=[10], x_min=[0], ramp_up=[1], ramp_down=[-1])
    args.update(kw)
    with pytest.raises(DomainError, match=msg):
        SystemModel.without_lines(n_loads=1, **args)


def test_shape_errors():
    with pytest.raises(DomainError):
        SystemModel([1, 2], [10], [0], [1], [-1], [], np.zeros((0, 2)), np.zeros((0, 1)))
    with pytest.raises(DomainError):
        SystemModel([1], [10], [0], [1], [-1], [1], [[1, 2]], [[1]])
