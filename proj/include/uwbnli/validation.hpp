#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "uwbnli/error.hpp"
#include "uwbnli/gn_oracle.hpp"
#include "uwbnli/nli.hpp"
#include "uwbnli/profile_fit.hpp"
#include "uwbnli/raman_solver.hpp"
#include "uwbnli/scenario.hpp"

namespace uwbnli {

inline bool has_raman(const FiberSpec& fiber) {
    if (const auto* p = std::get_if<RamanModel::Parametric>(&fiber.raman.form)) return p->peak_value != 0.0;
    for (double g : std::get<RamanModel::Measured>(fiber.raman.form).gain)
        if (g != 0.0) return true;
    return false;
}

struct ValidationRow {
    std::size_t channel = 0; // 1-based
    double frequency_thz = 0.0;
    double cfm_w = 0.0;
    double oracle_w = 0.0;
    double delta_db = 0.0; // CFM - oracle
    int oracle_nodes = 0;
};

/// Closed-form versus integral-oracle NLI for the first span of a small,
/// flat-loss, Raman-free scenario.
inline std::vector<ValidationRow> validate_against_oracle(const Scenario& s, const OracleOptions& oracle = {}) {
    if (s.spans.empty()) throw InvariantError("validate: scenario has no span");
    const FiberSpec& fiber = s.spans.front().fiber;
    if (has_raman(fiber)) throw RangeError("validate: the oracle covers Raman-free fibers only");
    const auto p = launch_powers(s.channels);
    const auto profile = propagate_span(p, fiber, s.channels, s.solver);
    const auto fit = fit_span(profile, SigmaSearch::for_span(s.solver, fiber.length_km));
    const auto cfm = nli_power_span(p, s.channels, fit.channels, fiber, rho_identity, NliOptions::from(s.solver));
    std::vector<ValidationRow> rows;
    for (std::size_t n = 0; n < s.channels.size(); ++n) {
        const auto o = nli_integral(n, s.channels, p, fiber, oracle);
        ValidationRow r;
        r.channel = n + 1;
        r.frequency_thz = s.channels[n].frequency_thz;
        r.cfm_w = cfm.nli_w[n];
        r.oracle_w = o.nli_w;
        r.delta_db = 10.0 * std::log10(r.cfm_w / r.oracle_w);
        r.oracle_nodes = o.nodes;
        rows.push_back(r);
    }
    return rows;
}

} // namespace uwbnli
