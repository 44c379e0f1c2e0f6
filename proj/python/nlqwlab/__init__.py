"""Nonlinear quantum walk laboratory: python bindings over the C++ core."""

from ._core import (  # noqa: F401
    BoundStateFamily,
    CoinField,
    LatticeGrid,
    ModulationState,
    NonlinearCoin,
    SpectralData,
    SpinorField,
    Pc,
    apply_N,
    apply_R,
    apply_U,
    build_family,
    decay_rate,
    decompose,
    delta_field,
    double_step,
    full_spectrum,
    haar_unitary,
    inner,
    make_coin,
    proj_minus,
    proj_plus,
    qty_resolvent,
    qty_time,
    random_unit_field,
    read_snapshot,
    real_inner,
    shift,
    step,
    stone_projection,
    write_snapshot,
    zigzag,
)

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
