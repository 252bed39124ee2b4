#include "dpe/cell_models.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace dpe {

std::string_view to_string(Accounting a) {
    return a == Accounting::Full ? "full" : "final-stage";
}

Accounting parse_accounting(std::string_view text) {
    if (text == "full") return Accounting::Full;
    if (text == "final-stage") return Accounting::FinalStage;
    throw std::invalid_argument("unknown accounting mode: " + std::string(text));
}

ReadResult read_current(const ModelParams& p, const CellInstance& cell, const VariationSample& vars,
                        Accounting acct) {
    const CellTopology top = read_topology(p, cell.kind);
    const DcSolution s = solve_dc(top, cell.resistance, vars);
    ReadResult r;
    if (cell.kind == CellKind::OneT1R) {
        r.i_out = s.i_mn1;
        r.power = top.rails.v_in * s.i_mem;
    } else {
        r.i_out = s.i_mn2;
        r.i_in = s.i_mn1;
        const double stages = acct == Accounting::Full ? r.i_in + r.i_out : r.i_out;
        r.power = top.rails.vdd * stages;
    }
    r.energy = r.power * p.t_read;
    return r;
}

ReadResult read_current(const ModelParams& p, const CellInstance& cell, Accounting acct) {
    return read_current(p, cell, nominal_sample(p.devices(cell.kind)), acct);
}

CellInstance program(const ModelParams& p, const CellInstance& cell, double drive, double pulse_width,
                     const VariationSample& vars, bool noise) {
    if (!(drive >= 0.0 && drive <= 1.3)) throw std::invalid_argument("programming drive outside [0, 1.3] V");
    if (pulse_width <= 0.0) return cell;
    TransientOptions opts = p.transient;
    opts.apply_lrs_noise = noise;
    const MemristorState m0 = MemristorState::from_resistance(p.memristor, cell.resistance);
    const TransientResult t = transient_set(write_topology(p, cell.kind), p.memristor, drive, pulse_width, m0, vars, opts);
    return {cell.kind, t.resistance};
}

SetResult set_current(const ModelParams& p, CellKind kind, double drive) {
    const CellTopology top = write_topology(p, kind);
    const MemristorState m0 = MemristorState::from_resistance(p.memristor, p.r_initial);
    const TransientResult t =
        transient_set(top, p.memristor, drive, p.set_pulse_width, m0, nominal_sample(top.devices), p.transient);
    SetResult r;
    r.current = t.peak_current;
    r.settled = t.final_current;
    r.resistance = t.resistance;
    const double supply = kind == CellKind::OneT1R ? drive : top.rails.vdd;
    r.power = supply * r.current;
    return r;
}

double dc_programmed_resistance(const ModelParams& p, CellKind kind, double drive, const VariationSample* vars,
                                bool noise) {
    const CellTopology top = write_topology(p, kind);
    TransientOptions opts = p.transient;
    opts.apply_lrs_noise = noise;
    const MemristorState m0 = MemristorState::from_resistance(p.memristor, p.r_initial);
    const VariationSample v = vars ? *vars : nominal_sample(top.devices);
    return dc_set(top, p.memristor, drive, m0, v, opts).resistance;
}

McStats summarize(std::vector<double> samples, std::size_t bins) {
    if (samples.empty()) throw std::invalid_argument("summarize: no samples");
    McStats s;
    s.n = samples.size();
    const auto [lo, hi] = std::minmax_element(samples.begin(), samples.end());
    s.min = *lo;
    s.max = *hi;
    s.mean = std::accumulate(samples.begin(), samples.end(), 0.0) / static_cast<double>(s.n);
    double ss = 0.0;
    for (double x : samples) ss += (x - s.mean) * (x - s.mean);
    // Identical samples: the rounded mean would leave a spurious residue.
    s.std = s.n > 1 && s.max > s.min ? std::sqrt(ss / static_cast<double>(s.n - 1)) : 0.0;
    bins = std::max<std::size_t>(bins, 1);
    s.bin_edges.resize(bins + 1);
    s.counts.assign(bins, 0);
    const double width = (s.max - s.min) / static_cast<double>(bins);
    for (std::size_t i = 0; i <= bins; ++i) s.bin_edges[i] = s.min + width * static_cast<double>(i);
    for (double x : samples) {
        std::size_t b = width > 0.0 ? static_cast<std::size_t>((x - s.min) / width) : 0;
        s.counts[std::min(b, bins - 1)]++;
    }
    s.samples = std::move(samples);
    return s;
}

McStats monte_carlo_read(const ModelParams& p, CellKind kind, double r, std::size_t n, std::uint64_t seed,
                         std::size_t bins) {
    if (n < 1) throw std::invalid_argument("monte_carlo_read: n must be >= 1");
    const DeviceSet& dev = p.devices(kind);
    const CellInstance cell{kind, r};
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        out[i] = read_current(p, cell, sample_variation(dev, seed, i)).i_out;
    }
    return summarize(std::move(out), bins);
}

}  // namespace dpe
