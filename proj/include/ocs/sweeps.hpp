#pragma once

#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "ocs/config.hpp"

namespace ocs {

struct SweepResult {
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;
    // scalar summary values appended as CSV comments / JSON fields, in order
    std::vector<std::pair<std::string, double>> metadata;
};

// Runs fn(i) for i in [0, n) on `workers` threads; each call writes into its
// own preallocated slot so row order is deterministic.
void run_parallel(int n, int workers, const std::function<void(int)>& fn);

// Width sweep of a rectangular barrier at fixed k. Columns: d_nm, kappa_d,
// tau_ph_fs, tau_perp_fs, tau_dwell_tr_fs, tau_dwell1_fs. Metadata: fitted
// exponential growth rate of the in-barrier times over kappa*d in [8, 16]
// (expected kappa) and the relative saturation drift of the Hartman pair.
SweepResult sweep_hartman(const RunConfig& cfg);

// Gap sweep of a double barrier at fixed k, d. Columns: l_nm, kl, tau1_fs,
// taugap_fs, tau2_fs, total_fs, tau_ph_fs. Metadata: one-parameter fit of
// taugap/tau1 against the (kl - sin kl) shape plus the fitted prefactor
// measured against both candidate asymptotic constants.
SweepResult sweep_double(const RunConfig& cfg);

} // namespace ocs
