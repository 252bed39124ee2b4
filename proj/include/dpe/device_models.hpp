#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

namespace dpe {

enum class Polarity { N, P };

enum class CellKind { OneT1R, ThreeT1R };

std::string_view to_string(CellKind kind);
CellKind parse_cell_kind(std::string_view text);

// Level-1 square-law transistor. kp already includes W/L. For P devices vth is
// the threshold magnitude and the model runs on source-referenced negated
// voltages.
struct MosfetParams {
    Polarity polarity = Polarity::N;
    double vth = 0.45;
    double kp = 1e-3;
    double lambda = 0.0;
    double sigma_vth = 0.0;
    double sigma_kp_rel = 0.0;
};

// Drain current and its partial derivatives with respect to vgs and vds.
struct MosfetEval {
    double id = 0.0;
    double gm = 0.0;
    double gds = 0.0;
};

/// Current flowing into the drain terminal. Cutoff below threshold, triode
/// below vds = vgs - vth, saturation above; channel-length modulation on both
/// sides so the two branches meet exactly at the boundary. Negative vds swaps
/// the roles of source and drain.
double mosfet_drain_current(const MosfetParams& p, double vgs, double vds);
MosfetEval mosfet_eval(const MosfetParams& p, double vgs, double vds);

// Piecewise-linear relative LRS spread as a function of the SET drive voltage.
struct LrsNoiseProfile {
    std::vector<std::pair<double, double>> knots{{0.7, 0.30}, {0.9, 0.05}, {1.3, 0.02}};

    double sigma_at(double drive) const;
};

struct MemristorParams {
    double r_on = 1e3;
    double r_off = 100e3;
    double v_set = 0.7;
    double a_rate = 1.0;
    double v0 = 0.01;
    LrsNoiseProfile lrs_noise;
};

struct MemristorState {
    double w = 0.0;

    static MemristorState from_resistance(const MemristorParams& m, double r);
};

/// Log-linear interpolation r_off^(1-w) * r_on^w.
double memristor_resistance(const MemristorParams& m, const MemristorState& s);

/// Explicit SET update: below v_set nothing happens, above it w grows by
/// dt * a_rate * exp((v - v_set) / v0), clamped to 1.
MemristorState set_dynamics_step(const MemristorParams& m, const MemristorState& s,
                                 double v_across, double dt, double noise = 1.0);

/// dw/dt at the given memristor voltage; the exponent is capped so the rate
/// stays finite.
double set_rate(const MemristorParams& m, double v_across);

// Transistor roles inside a cell. 1T1R only uses the first slot.
enum class Role : std::size_t { MN1 = 0, MN2 = 1, MP3 = 2 };
inline constexpr std::size_t kMaxTransistors = 3;

struct DeviceSet {
    std::array<MosfetParams, kMaxTransistors> fets{};
    std::size_t count = 1;

    const MosfetParams& operator[](Role r) const { return fets[static_cast<std::size_t>(r)]; }
    MosfetParams& operator[](Role r) { return fets[static_cast<std::size_t>(r)]; }
};

struct VariationSample {
    std::array<double, kMaxTransistors> vth{};
    std::array<double, kMaxTransistors> kp{};
    std::size_t count = 0;
    // Standard-normal deviate behind the LRS multiplier; the spread it maps to
    // depends on the programming drive.
    double lrs_z = 0.0;

    /// Mean-one lognormal multiplier with relative std `sigma_rel`.
    double lrs_multiplier(double sigma_rel) const;
    /// Copy of `nominal` with the realized vth/kp values substituted.
    DeviceSet apply(const DeviceSet& nominal) const;
};

VariationSample nominal_sample(const DeviceSet& devices);

/// Gaussian vth shift, multiplicative Gaussian kp, and an LRS deviate drawn
/// from a stream keyed by (seed, index, stream) so results do not depend on
/// call order.
VariationSample sample_variation(const DeviceSet& devices, std::uint64_t seed, std::uint64_t index,
                                 std::uint64_t stream = 1);

}  // namespace dpe
