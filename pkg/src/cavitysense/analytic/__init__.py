"""Closed-form results organized by regime."""

from .detection import degradation_factor, detection_noise_sensitivity, robustness_report
from .gamma import gamma_moments, gamma_optimal_time, gamma_penalty, gamma_sensitivity
from .ideal import direct_measurement_noqfi, ideal_moments, ideal_qfi, ideal_sensitivity
from .kappa import kappa_moments, kappa_optimum, kappa_sensitivity, kappa_sensitivity_assembled
from .loss import (DyingCatSpec, SpinDensityMatrix, dying_cat_qfi, loss_spin_density,
                   qfi_loss_optimum, qfi_with_loss)
from .results import QfiResult, SensitivityResult
from .wigner import WignerGrid, spin_boson_cat_components, wigner_cat

__all__ = [
    "DyingCatSpec", "QfiResult", "SensitivityResult", "SpinDensityMatrix", "WignerGrid",
    "degradation_factor", "detection_noise_sensitivity", "direct_measurement_noqfi",
    "dying_cat_qfi", "gamma_moments", "gamma_optimal_time", "gamma_penalty",
    "gamma_sensitivity", "ideal_moments", "ideal_qfi", "ideal_sensitivity", "kappa_moments",
    "kappa_optimum", "kappa_sensitivity", "kappa_sensitivity_assembled", "loss_spin_density",
    "qfi_loss_optimum", "qfi_with_loss", "robustness_report", "spin_boson_cat_components",
    "wigner_cat",
]
