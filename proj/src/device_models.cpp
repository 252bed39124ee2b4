#include "dpe/device_models.hpp"

#include "dpe/rng.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace dpe {

std::string_view to_string(CellKind kind) {
    return kind == CellKind::OneT1R ? "1t1r" : "3t1r";
}

CellKind parse_cell_kind(std::string_view text) {
    if (text == "1t1r" || text == "1T1R") return CellKind::OneT1R;
    if (text == "3t1r" || text == "3T1R") return CellKind::ThreeT1R;
    throw std::invalid_argument("unknown cell kind: " + std::string(text));
}

namespace {

// N-type evaluation with vds >= 0.
MosfetEval eval_forward(const MosfetParams& p, double vgs, double vds) {
    const double vov = vgs - p.vth;
    if (vov <= 0.0) return {};
    const double clm = 1.0 + p.lambda * vds;
    MosfetEval e;
    if (vds < vov) {
        const double core = vov * vds - 0.5 * vds * vds;
        e.id = p.kp * core * clm;
        e.gm = p.kp * vds * clm;
        e.gds = p.kp * ((vov - vds) * clm + core * p.lambda);
    } else {
        const double core = 0.5 * vov * vov;
        e.id = p.kp * core * clm;
        e.gm = p.kp * vov * clm;
        e.gds = p.kp * core * p.lambda;
    }
    return e;
}

// N-type evaluation for any vds sign (symmetric device).
MosfetEval eval_n(const MosfetParams& p, double vgs, double vds) {
    if (vds >= 0.0) return eval_forward(p, vgs, vds);
    // Source and drain exchange: I(vgs, vds) = -F(vgs - vds, -vds).
    const MosfetEval r = eval_forward(p, vgs - vds, -vds);
    MosfetEval e;
    e.id = -r.id;
    e.gm = -r.gm;
    // d/dvds of -F(vgs - vds, -vds) = F_g + F_d
    e.gds = r.gm + r.gds;
    return e;
}

}  // namespace

MosfetEval mosfet_eval(const MosfetParams& p, double vgs, double vds) {
    if (p.polarity == Polarity::N) return eval_n(p, vgs, vds);
    const MosfetEval r = eval_n(p, -vgs, -vds);
    // I_p(vgs, vds) = -I_n(-vgs, -vds); derivatives keep their sign.
    return {-r.id, r.gm, r.gds};
}

double mosfet_drain_current(const MosfetParams& p, double vgs, double vds) {
    return mosfet_eval(p, vgs, vds).id;
}

double LrsNoiseProfile::sigma_at(double drive) const {
    if (knots.empty()) return 0.0;
    if (drive <= knots.front().first) return knots.front().second;
    if (drive >= knots.back().first) return knots.back().second;
    for (std::size_t i = 1; i < knots.size(); ++i) {
        const auto [x1, y1] = knots[i];
        if (drive <= x1) {
            const auto [x0, y0] = knots[i - 1];
            const double t = (drive - x0) / (x1 - x0);
            return y0 + t * (y1 - y0);
        }
    }
    return knots.back().second;
}

MemristorState MemristorState::from_resistance(const MemristorParams& m, double r) {
    const double span = std::log(m.r_off / m.r_on);
    const double w = std::log(m.r_off / r) / span;
    return {std::clamp(w, 0.0, 1.0)};
}

double memristor_resistance(const MemristorParams& m, const MemristorState& s) {
    if (s.w <= 0.0) return m.r_off;
    if (s.w >= 1.0) return m.r_on;
    return std::exp((1.0 - s.w) * std::log(m.r_off) + s.w * std::log(m.r_on));
}

double set_rate(const MemristorParams& m, double v_across) {
    if (v_across <= m.v_set) return 0.0;
    const double arg = std::min((v_across - m.v_set) / m.v0, 600.0);
    return m.a_rate * std::exp(arg);
}

MemristorState set_dynamics_step(const MemristorParams& m, const MemristorState& s, double v_across,
                                 double dt, double noise) {
    if (dt <= 0.0 || v_across <= m.v_set) return s;
    const double dw = dt * set_rate(m, v_across) * noise;
    return {std::min(1.0, s.w + dw)};
}

double VariationSample::lrs_multiplier(double sigma_rel) const {
    if (sigma_rel <= 0.0) return 1.0;
    const double s = std::sqrt(std::log1p(sigma_rel * sigma_rel));
    return std::exp(s * lrs_z - 0.5 * s * s);
}

DeviceSet VariationSample::apply(const DeviceSet& nominal) const {
    DeviceSet out = nominal;
    for (std::size_t i = 0; i < std::min(count, nominal.count); ++i) {
        out.fets[i].vth = vth[i];
        out.fets[i].kp = kp[i];
    }
    return out;
}

VariationSample nominal_sample(const DeviceSet& devices) {
    VariationSample s;
    s.count = devices.count;
    for (std::size_t i = 0; i < devices.count; ++i) {
        s.vth[i] = devices.fets[i].vth;
        s.kp[i] = devices.fets[i].kp;
    }
    return s;
}

VariationSample sample_variation(const DeviceSet& devices, std::uint64_t seed, std::uint64_t index,
                                 std::uint64_t stream) {
    auto engine = keyed_engine(seed, index, stream);
    std::normal_distribution<double> normal(0.0, 1.0);
    VariationSample s;
    s.count = devices.count;
    // Fixed draw order over all slots keeps a device's deviates independent of
    // how many transistors the cell has.
    for (std::size_t i = 0; i < kMaxTransistors; ++i) {
        const double z_vth = normal(engine);
        const double z_kp = normal(engine);
        if (i >= devices.count) continue;
        const MosfetParams& p = devices.fets[i];
        s.vth[i] = p.vth + p.sigma_vth * z_vth;
        // Truncated far in the tail so kp stays positive.
        s.kp[i] = p.kp * std::max(1e-3, 1.0 + p.sigma_kp_rel * z_kp);
    }
    s.lrs_z = normal(engine);
    return s;
}

}  // namespace dpe
