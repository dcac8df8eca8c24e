"""Single-query postselected synthesis."""

from __future__ import annotations

import numpy as np

from ..numerics import PureState
from ..synthesis import OracleSpec, SynthesisPlan
from .common import (
    ExecutionReport,
    OracleMismatchError,
    PostselectCircuit,
    _hadamard_target,
    postselect_metrics,
)


def run_postselect(plan: SynthesisPlan, oracle: OracleSpec) -> ExecutionReport:
    """Run the plan's circuit once and report the success-branch quality.

    The prepared state is g |0..0>|psi'>|z> + (junk orthogonal to the flag),
    with psi' within the schedule's terminal residual of the target.  Exactly
    one merged oracle query is consumed; the classical description register
    is checked to hold z afterwards.
    """
    circuit = PostselectCircuit(plan, oracle)
    state = circuit.prepare()
    if circuit.z_register != plan.z:
        raise OracleMismatchError("description register does not hold z after the run")
    amp, error_2norm, error_trace = postselect_metrics(plan, state)
    return ExecutionReport(
        query_count=circuit.query_count,
        success_amplitude=amp,
        error_2norm=error_2norm,
        error_trace=error_trace,
        output_pure=PureState(circuit.t_reg + plan.params.n, state.reshape(-1)),
    )


def quantum_z_leakage(plan: SynthesisPlan, oracle: OracleSpec, z_bits: int = 8) -> tuple[float, int]:
    """Run one instance with the first z_bits description bits held as qubits.

    Everywhere else the description register is tracked classically, which is
    sound because the circuit only queries the description addresses with
    computational-basis constants.  This validation mode carries those bits
    through the run as genuine amplitudes and returns (max off-diagonal
    magnitude of their reduced density matrix, the basis value they hold);
    honest oracles give exactly zero leakage and the leading bits of z.
    """
    circuit = PostselectCircuit(plan, oracle)
    zdim = 1 << z_bits
    if not 1 <= z_bits <= 8 * len(plan.z):
        raise ValueError(f"z_bits must lie in [1, {8 * len(plan.z)}], got {z_bits}")
    if circuit.rows * circuit.dim * zdim > (1 << 24):
        raise ValueError("register too large for the quantum-z validation run")
    # Value packing mirrors the description string bytes: address-i bit is
    # bit i of the value, so for z_bits = 8 the register should hold z[0].
    zval = 0
    for i in range(z_bits):
        bit = oracle.query(oracle.T * circuit.dim + i)
        zval |= bit << i
    slices = [circuit.zero_state() if w == 0 else None for w in range(zdim)]
    slices = [circuit._load(s) if s is not None else None for s in slices]
    slices = [
        _hadamard_target(s, circuit.n) if s is not None else None for s in slices
    ]
    slices = [circuit._query(s) if s is not None else None for s in slices]
    # The query's description output XORs a constant into the z register.
    permuted: list[np.ndarray | None] = [None] * zdim
    for w, s in enumerate(slices):
        if s is not None:
            permuted[w ^ zval] = s
    slices = [
        circuit._unload(circuit._steps(s, invert=False)) if s is not None else None
        for s in permuted
    ]
    stacked = np.stack(
        [s if s is not None else np.zeros((circuit.rows, circuit.dim)) for s in slices]
    )
    flat = stacked.reshape(zdim, -1)
    rho_z = flat @ flat.conj().T
    off = rho_z - np.diag(np.diag(rho_z))
    return float(np.max(np.abs(off))), zval
