#pragma once

#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include "uwbnli/link_budget.hpp"
#include "uwbnli/optimizer.hpp"
#include "uwbnli/report_io.hpp"
#include "uwbnli/validation.hpp"

// Conversions from pipeline results to output tables.

namespace uwbnli {

inline double dbm_or_floor(double w) { return w > 0.0 ? watt_to_dbm(w) : -std::numeric_limits<double>::infinity(); }

/// Power profiles, one row per (span, z sample), one column per channel.
inline Table profile_table(const LinkTrace& trace, const Scenario& s) {
    Table t;
    t.columns = {"span", "z_km"};
    for (const auto& c : s.channels) t.columns.push_back("P" + std::to_string(c.index) + "_dBm");
    for (std::size_t sp = 0; sp < trace.profiles.size(); ++sp) {
        const auto& p = trace.profiles[sp];
        for (std::size_t i = 0; i < p.samples(); ++i) {
            std::vector<Cell> row{static_cast<long long>(sp + 1), p.z_km[i]};
            for (std::size_t n = 0; n < p.channels(); ++n) row.emplace_back(dbm_or_floor(p.power_w(n, i)));
            t.rows.push_back(std::move(row));
        }
    }
    return t;
}

inline Table fit_table(const LinkTrace& trace, const Scenario& s) {
    Table t;
    t.columns = {"span", "channel", "f_THz", "alpha0_per_km", "alpha1_per_km", "sigma_per_km", "residual_dB",
                 "sigma_identifiable"};
    for (std::size_t sp = 0; sp < trace.fits.size(); ++sp)
        for (std::size_t n = 0; n < trace.fits[sp].channels.size(); ++n) {
            const auto& f = trace.fits[sp].channels[n];
            t.rows.push_back({static_cast<long long>(sp + 1), static_cast<long long>(s.channels[n].index),
                              s.channels[n].frequency_thz, f.alpha0, f.alpha1, f.sigma, f.residual_db,
                              static_cast<long long>(f.sigma_identifiable ? 1 : 0)});
        }
    return t;
}

/// Per-span and total NLI; span "total" rows hold the incoherent sum.
inline Table nli_table(const LinkTrace& trace, const Scenario& s) {
    Table t;
    t.columns = {"channel", "span", "f_THz", "P_NLI_dBm", "M", "clamped_pairs"};
    for (std::size_t sp = 0; sp < trace.nli.size(); ++sp)
        for (std::size_t n = 0; n < s.channels.size(); ++n)
            t.rows.push_back({static_cast<long long>(s.channels[n].index), static_cast<long long>(sp + 1),
                              s.channels[n].frequency_thz, dbm_or_floor(trace.nli[sp].nli_w[n]),
                              static_cast<long long>(trace.nli[sp].series_order),
                              static_cast<long long>(trace.nli[sp].clamped_pairs)});
    const auto total = accumulate_link(trace.nli);
    for (std::size_t n = 0; n < s.channels.size(); ++n)
        t.footer.push_back({static_cast<long long>(s.channels[n].index), std::string("total"),
                            s.channels[n].frequency_thz, dbm_or_floor(total[n]), std::string(), std::string()});
    return t;
}

inline Table report_table(const LinkReport& r) {
    Table t;
    t.columns = {"channel", "band", "f_THz", "P_dBm", "P_ASE_dBm", "P_NLI_dBm", "GOSNR_dB", "IR_bits", "rate_Gbps"};
    double rate = 0.0;
    for (const auto& c : r.channels) {
        t.rows.push_back({static_cast<long long>(c.index), std::string(to_string(c.band)), c.frequency_thz,
                          dbm_or_floor(c.launch_w), dbm_or_floor(c.ase_w), dbm_or_floor(c.nli_w), c.gosnr_db,
                          c.info_rate, c.data_rate_gbps});
        rate += c.data_rate_gbps;
    }
    t.footer.push_back({std::string("total"), std::string(), std::string(), std::string(), std::string(),
                        std::string(), std::string(), std::string(), rate});
    return t;
}

inline Table policy_table(const PowerPolicy& p, const Scenario& s) {
    Table t;
    t.columns = {"band", "center_THz", "c0_dBm", "c1_dB_per_THz", "c2_dB_per_THz2", "c3_dB_per_THz3"};
    for (const auto& [label, c] : p.coefficients) {
        const Band* b = find_band(s.bands, label);
        t.rows.push_back({std::string(to_string(label)), b ? b->center_thz() : 0.0, c[0], c[1], c[2], c[3]});
    }
    return t;
}

inline Table sweep_table(const std::vector<SweepStep>& steps) {
    Table t;
    t.columns = {"step", "n_channels", "band_of_last_channel", "throughput_Tbps", "marginal_IR_bits", "added_mean_IR_bits",
                 "evaluations"};
    for (const auto& st : steps)
        t.rows.push_back({static_cast<long long>(st.step), static_cast<long long>(st.channels),
                          std::string(to_string(st.last_band)), st.throughput_tbps, st.marginal_ir,
                          st.added_mean_ir, static_cast<long long>(st.evaluations)});
    return t;
}

inline Table validation_table(const std::vector<ValidationRow>& rows) {
    Table t;
    t.columns = {"channel", "f_THz", "CFM_dB", "oracle_dB", "delta_dB"};
    for (const auto& r : rows)
        t.rows.push_back({static_cast<long long>(r.channel), r.frequency_thz, dbm_or_floor(r.cfm_w),
                          dbm_or_floor(r.oracle_w), r.delta_db});
    return t;
}

} // namespace uwbnli
