# File: app/config/solver_config.py
"""
Solver configuration.

SolverConfig holds every knob of the ground-state solvers. It is frozen and
forbids unknown fields, so a typo in a config file is an error rather than a
silently ignored key. GridPolicy is the subset that decides the periodic box.
"""

from typing import Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, field_validator


class GridPolicy(BaseModel):
    """
    How to choose the periodic box for a solve.

    Attributes:
        box_l: Fixed box side. None applies the box rule.
        grid_n: Fixed points per axis. None derives n from grid_spacing.
        grid_spacing: Target spacing h when grid_n is not given.
        box_min: Smallest box side the rule may return.
        box_scale: Length per particle^(1/d) reserved for the cluster.
        decay_lengths: Decay lengths 1/sqrt|mu| kept free on each side of the cluster.
        c_lt: Lieb-Thirring constant for the mu estimate (None = shipped default).
    """

    model_config = ConfigDict(frozen=True, extra="forbid")

    box_l: Optional[float] = Field(None, gt=0)
    grid_n: Optional[int] = Field(None, ge=8)
    grid_spacing: float = Field(0.1, gt=0)
    box_min: float = Field(40.0, gt=0)
    box_scale: float = Field(8.0, ge=0)
    decay_lengths: float = Field(10.0, gt=0)
    c_lt: Optional[float] = Field(None, gt=0)

    @field_validator("grid_n")
    @classmethod
    def _even_points(cls, value: Optional[int]) -> Optional[int]:
        if value is not None and value % 2:
            raise ValueError(f"grid_n must be even, got {value}")
        return value


class SolverConfig(GridPolicy):
    """
    Full solver configuration. Inherits the grid policy fields.

    Attributes:
        box_check: Re-solve in a box grown by box_growth and compare energies.
        box_growth: Growth factor for the box check.
        box_check_tol: Accepted relative energy change between the two boxes.
        max_box_refinements: How many times the box may be regrown or refined.
        edge_tol: Largest accepted density on the far face of the torus, relative to max rho.
        virial_tol: Largest accepted relative virial residual.
        el_tol: Euler-Lagrange residual tolerance per orbital.
        eig_tol: Residual tolerance for eigenpairs of the mean-field operator.
        energy_tol: Energy stagnation tolerance between iterations.
        backtrack_slack: Allowed energy increase of an accepted flow step.
        max_iter: Iteration cap for the gradient flow.
        step_size: Initial flow step.
        max_step: Upper bound for the adaptive flow step.
        momentum: Heavy-ball coefficient of the flow (0 disables).
        precond_shift: Lower bound for the shift of the kinetic preconditioner.
        engine: Inner engine: projected flow, SCF, or flow refined by SCF.
        mixing: Linear density mixing for SCF.
        scf_max_iter: Iteration cap for SCF.
        scf_tol: Density change (L1) below which a non-converged SCF gives up.
        n_restarts: Number of initialisations; the first is the oscillator ladder.
        seed: Seed for random restarts.
        threads: Worker threads for restarts and sweeps.
        check_mu_bounds: Compute J(1) on the same grid to check the mu_N bounds.
        dump_orbitals: Write orbitals as binary arrays next to the JSON record.
    """

    box_check: bool = True
    box_growth: float = Field(1.5, gt=1)
    box_check_tol: float = Field(1e-5, gt=0)
    max_box_refinements: int = Field(4, ge=0)
    edge_tol: float = Field(1e-8, gt=0)
    virial_tol: float = Field(1e-5, gt=0)

    el_tol: float = Field(1e-7, gt=0)
    eig_tol: float = Field(1e-8, gt=0)
    energy_tol: float = Field(1e-12, ge=0)
    backtrack_slack: float = Field(1e-12, ge=0)

    max_iter: int = Field(20000, ge=1)
    step_size: float = Field(0.5, gt=0)
    max_step: float = Field(2.0, gt=0)
    momentum: float = Field(0.7, ge=0, lt=1)
    precond_shift: float = Field(0.5, gt=0)

    engine: Literal["flow", "scf", "flow+scf"] = "flow"
    mixing: float = Field(0.3, gt=0, le=1)
    scf_max_iter: int = Field(400, ge=1)
    scf_tol: float = Field(1e-10, gt=0)

    n_restarts: int = Field(1, ge=1)
    seed: int = 0
    threads: int = Field(1, ge=1)

    check_mu_bounds: bool = True
    dump_orbitals: bool = False

    def grid_policy(self) -> GridPolicy:
        return GridPolicy(**{name: getattr(self, name) for name in GridPolicy.model_fields})
