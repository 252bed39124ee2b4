#pragma once

#include "dpe/params.hpp"

#include <cstdint>
#include <string_view>
#include <vector>

namespace dpe {

// Which currents count toward cell power. Full: 1T1R V_in * I_mem,
// 3T1R VDD * (I_in + I2). FinalStage: 3T1R VDD * I2 only.
enum class Accounting { Full, FinalStage };

std::string_view to_string(Accounting a);
Accounting parse_accounting(std::string_view text);

struct CellInstance {
    CellKind kind = CellKind::OneT1R;
    double resistance = 100e3;
};

struct ReadResult {
    double i_out = 0.0;  // 1T1R source current, 3T1R I2
    double i_in = 0.0;   // 3T1R first stage (MN1), zero for 1T1R
    double power = 0.0;
    double energy = 0.0;
};

ReadResult read_current(const ModelParams& p, const CellInstance& cell, const VariationSample& vars,
                        Accounting acct = Accounting::Full);
ReadResult read_current(const ModelParams& p, const CellInstance& cell, Accounting acct = Accounting::Full);

/// Runs a SET pulse from the cell's current state. With `noise` the final
/// resistance carries the drive-dependent LRS multiplier from `vars`.
CellInstance program(const ModelParams& p, const CellInstance& cell, double drive, double pulse_width,
                     const VariationSample& vars, bool noise = false);

struct SetResult {
    double current = 0.0;  // peak memristor-branch current over the pulse
    double settled = 0.0;  // current at the end of the pulse
    double power = 0.0;    // supply * current; supply is the drive for 1T1R, write VDD for 3T1R
    double resistance = 0.0;
};

/// SET pulse of `p.set_pulse_width` from the configured initial resistance.
SetResult set_current(const ModelParams& p, CellKind kind, double drive);

/// Settled resistance after DC programming from the initial resistance.
double dc_programmed_resistance(const ModelParams& p, CellKind kind, double drive,
                                const VariationSample* vars = nullptr, bool noise = false);

struct McStats {
    std::size_t n = 0;
    double mean = 0.0;
    double std = 0.0;  // sample standard deviation (n - 1)
    double min = 0.0;
    double max = 0.0;
    std::vector<double> bin_edges;
    std::vector<std::size_t> counts;
    std::vector<double> samples;
};

McStats summarize(std::vector<double> samples, std::size_t bins = 20);

/// READ i_out over n variation samples keyed by (seed, 0..n-1).
McStats monte_carlo_read(const ModelParams& p, CellKind kind, double r, std::size_t n, std::uint64_t seed,
                         std::size_t bins = 20);

}  // namespace dpe
