// Acceptance run: prints one PASS/FAIL line per criterion with the measured
// values underneath, and exits nonzero when any criterion fails.

#include "dpe/experiments.hpp"
#include "support/oracles.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <vector>

using namespace dpe;
namespace fs = std::filesystem;

namespace {

struct Criterion {
    int id;
    std::string title;
    bool pass = true;
    std::vector<std::string> lines;

    void check(bool ok, const std::string& what) {
        pass = pass && ok;
        lines.push_back(std::string(ok ? "ok   " : "MISS ") + what);
    }
    // |got - want| <= tol * |want|
    void rel(const std::string& name, double got, double want, double tol, const std::string& unit) {
        const double err = (got - want) / want;
        char buf[256];
        std::snprintf(buf, sizeof buf, "%s = %.4g %s (target %.4g, %+.1f%%, tol +-%.0f%%)", name.c_str(), got,
                      unit.c_str(), want, 100.0 * err, 100.0 * tol);
        check(std::abs(err) <= tol, buf);
    }
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0) {
    char buf[256];
    std::snprintf(buf, sizeof buf, f, a, b, c);
    return buf;
}

const ModelParams& params() {
    static const ModelParams p = load_params(DPE_SOURCE_DIR "/config/calibrated.yaml");
    return p;
}

constexpr std::uint64_t kSeed = 1;

void c1_read(Criterion& c) {
    const ModelParams& p = params();
    c.rel("1T1R I_out @5k", read_current(p, {CellKind::OneT1R, 5e3}).i_out * 1e6, 110.0, 0.05, "uA");
    c.rel("1T1R I_out @20k", read_current(p, {CellKind::OneT1R, 20e3}).i_out * 1e6, 35.0, 0.05, "uA");
    c.rel("3T1R I2 @5k", read_current(p, {CellKind::ThreeT1R, 5e3}).i_out * 1e6, 3.005, 0.05, "uA");
    c.rel("3T1R I2 @20k", read_current(p, {CellKind::ThreeT1R, 20e3}).i_out * 1e6, 2.833, 0.05, "uA");
}

void c2_set(Criterion& c) {
    const ModelParams& p = params();
    c.rel("1T1R I_set @0.8V", set_current(p, CellKind::OneT1R, 0.8).current * 1e6, 7.0, 0.10, "uA");
    c.rel("1T1R I_set @1.2V", set_current(p, CellKind::OneT1R, 1.2).current * 1e6, 132.0, 0.10, "uA");
    c.rel("3T1R I_set @0.8V", set_current(p, CellKind::ThreeT1R, 0.8).current * 1e6, 35.0, 0.10, "uA");
    c.rel("3T1R I_set @1.2V", set_current(p, CellKind::ThreeT1R, 1.2).current * 1e6, 292.0, 0.10, "uA");
}

void c3_monte_carlo(Criterion& c) {
    const ModelParams& p = params();
    const auto t0 = std::chrono::steady_clock::now();
    const McStats a = monte_carlo_read(p, CellKind::OneT1R, 9e3, 1000, kSeed);
    const McStats b = monte_carlo_read(p, CellKind::ThreeT1R, 9e3, 1000, kSeed);
    const double secs = seconds_since(t0);
    c.rel("1T1R mean @9k", a.mean * 1e6, 54.5, 0.10, "uA");
    c.rel("1T1R std @9k", a.std * 1e6, 0.452, 0.25, "uA");
    c.rel("3T1R mean @9k", b.mean * 1e6, 2.85, 0.10, "uA");
    c.rel("3T1R std @9k", b.std * 1e6, 0.181, 0.25, "uA");
    c.check(secs < 60.0, fmt("runtime %.2f s for 2 x 1000 samples (limit 60 s)", secs));
}

void c4_pulse(Criterion& c) {
    const ModelParams& p = params();
    const std::vector<double> widths{100e-9, 1e-6, 10e-6, 100e-6, 1e-3};
    auto r_at = [&](CellKind k, double d, double w) {
        return program(p, {k, p.r_initial}, d, w, nominal_sample(p.devices(k))).resistance;
    };
    c.rel("1T1R R @0.8V, 100ns", r_at(CellKind::OneT1R, 0.8, 100e-9) * 1e-3, 100.0, 0.20, "kohm");
    c.rel("1T1R R @0.8V, 1ms", r_at(CellKind::OneT1R, 0.8, 1e-3) * 1e-3, 30.0, 0.20, "kohm");
    for (double d : {0.8, 0.9, 1.0, 1.1, 1.2}) {
        double lo = INFINITY, hi = 0.0, sum = 0.0;
        for (double w : widths) {
            const double r = r_at(CellKind::ThreeT1R, d, w);
            lo = std::min(lo, r);
            hi = std::max(hi, r);
            sum += r;
        }
        const double spread = (hi - lo) / (sum / static_cast<double>(widths.size()));
        c.check(spread < 0.10, fmt("3T1R spread over 100ns..1ms @%.1fV = %.2f%% (limit 10%%)", d, 100.0 * spread));
    }
}

void c5_compare(Criterion& c) {
    const ModelParams& p = params();
    const ReadResult a = read_current(p, {CellKind::OneT1R, 5e3});
    const ReadResult b = read_current(p, {CellKind::ThreeT1R, 5e3});
    c.rel("READ power ratio 1T1R/3T1R @5k", a.power / b.power, 9.37, 0.15, "x");
    c.rel("3T1R I_in + I2 @5k", (b.i_in + b.i_out) * 1e6, 4.459, 0.10, "uA");
    const Table t = compare(p, Accounting::Full);
    bool exact = a.energy == a.power * p.t_read && b.energy == b.power * p.t_read && p.t_read == 1e-6;
    exact = exact && t.rows[1][1] == t.rows[2][1] && t.rows[1][2] == t.rows[2][2];
    c.check(exact, "READ energy cells equal power x 1 us (pJ column equals uW column)");
}

void c6_classification(Criterion& c) {
    struct Row {
        std::string name;
        double acc1, acc3;
    };
    const std::vector<Row> rows{{"iris", 88.88, 88.88},
                                {"wine", 85.18, 81.48},
                                {"breast_cancer", 93.56, 93.56},
                                {"banknote", 91.99, 91.26}};
    ClassifyOptions o;
    o.seed = kSeed;
    o.data_dir = DPE_SOURCE_DIR "/data";
    const auto t0 = std::chrono::steady_clock::now();
    for (const auto& r : rows) {
        const fs::path file = fs::path(o.data_dir) / dataset_info(r.name).file;
        if (!fs::exists(file)) {
            c.check(false, r.name + ": dataset missing (" + file.string() + ")");
            continue;
        }
        const ClassifyReport rep = classify(params(), r.name, o);
        const Metrics& m1 = rep.kinds[0].test;
        const Metrics& m3 = rep.kinds[1].test;
        c.check(std::abs(m1.accuracy - r.acc1) <= 5.0,
                r.name + fmt(" 1T1R test acc %.2f%% (target %.2f +-5)", m1.accuracy, r.acc1));
        c.check(std::abs(m3.accuracy - r.acc3) <= 5.0,
                r.name + fmt(" 3T1R test acc %.2f%% (target %.2f +-5)", m3.accuracy, r.acc3));
        const double ratio = energy_improvement(rep);
        c.check(ratio >= 5.5 && ratio <= 9.5,
                r.name + fmt(" energy improvement %.2fx (%.1f / %.1f pJ, range 5.5..9.5)", ratio,
                             m1.mean_energy * 1e12, m3.mean_energy * 1e12));
        if (r.name == "iris" || r.name == "wine") {
            c.check(m3.tie_rate > m1.tie_rate,
                    r.name + fmt(" tie rate 3T1R %.2f%% > 1T1R %.2f%%", m3.tie_rate, m1.tie_rate));
        }
    }
    const double secs = seconds_since(t0);
    c.check(secs < 600.0, fmt("runtime %.1f s (limit 600 s)", secs));
}

void c7_solver(Criterion& c) {
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    int n = 0, agree = 0, kcl_ok = 0;
    double worst_v = 0.0, worst_kcl = 0.0;
    for (int k = 0; k < 1000; ++k) {
        const bool three = k % 2;
        CellTopology t;
        auto fet = [&](Polarity pol) {
            return MosfetParams{pol, 0.3 + 0.4 * u(rng), std::pow(10.0, -5.0 + 3.0 * u(rng)), 0.2 * u(rng), 0, 0};
        };
        const double r = std::pow(10.0, 3.0 + 2.3 * u(rng));
        if (!three) {
            t.kind = CellKind::OneT1R;
            t.devices[Role::MN1] = fet(Polarity::N);
            t.rails.v_in = 0.2 + 1.1 * u(rng);
            t.rails.v_g = t.devices[Role::MN1].vth + 0.05 + u(rng);
        } else {
            t.kind = CellKind::ThreeT1R;
            t.devices.count = 3;
            t.devices[Role::MN1] = fet(Polarity::N);
            t.devices[Role::MN2] = fet(Polarity::N);
            t.devices[Role::MP3] = fet(Polarity::P);
            t.rails.vdd = 1.0 + u(rng);
            t.rails.v_readb = 0.3 * u(rng);
            t.rails.v_in = std::min(t.devices[Role::MN1].vth + 0.05 + u(rng), 2.0);
            t.rails.v_column = t.rails.vdd;
            if (t.rails.vdd - t.rails.v_readb < t.devices[Role::MP3].vth + 0.1) t.rails.v_readb = 0.0;
        }
        ++n;
        DcSolution s;
        try {
            s = solve_dc(t, r, nominal_sample(t.devices));
        } catch (const std::exception&) {
            continue;
        }
        const oracle::NodeVoltages o = oracle::sweep_operating_point(t, r, 1e-6);
        const double dv = std::max(std::abs(s.v_bottom - o.bottom), std::abs(s.v_top - o.top));
        worst_v = std::max(worst_v, dv);
        agree += dv < 10e-6;
        const double kcl = kcl_residual(t, r, t.devices, s.v_top, s.v_bottom).max_abs();
        worst_kcl = std::max(worst_kcl, kcl);
        kcl_ok += s.converged && kcl < 1e-12;
    }
    c.check(n >= 1000 && agree == n, fmt("%g/%g random cells within 10 uV of the sweep oracle (worst %.3g V)", agree, n, worst_v));
    c.check(kcl_ok == n, fmt("%g/%g converged with KCL residual < 1e-12 A (worst %.3g A)", kcl_ok, n, worst_kcl));
}

void c8_continuity_gradient(Criterion& c) {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    double worst = 0.0;
    for (int k = 0; k < 1000; ++k) {
        const MosfetParams m{Polarity::N, 0.3 + 0.5 * u(rng), std::pow(10.0, -5 + 3 * u(rng)), 0.3 * u(rng), 0, 0};
        const double vgs = m.vth + 0.05 + u(rng);
        const double b = vgs - m.vth;
        const double at = mosfet_drain_current(m, vgs, b);
        const double below = mosfet_drain_current(m, vgs, std::nextafter(b, 0.0));
        const double above = mosfet_drain_current(m, vgs, std::nextafter(b, 10.0));
        worst = std::max({worst, std::abs(at - below) / at, std::abs(above - at) / at});
    }
    c.check(worst <= 1e-15, fmt("triode/saturation jump across one ulp of vds: %.3g relative (limit 1e-15)", worst));

    double worst_g = 0.0;
    for (int inst = 0; inst < 5; ++inst) {
        const std::size_t rows = 12, classes = 3, n = 10;
        std::vector<std::vector<double>> x(n, std::vector<double>(rows, 0.0));
        std::vector<int> y(n);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t f = 0; f < 3; ++f) x[i][f * 4 + static_cast<std::size_t>(u(rng) * 4)] = 1.0;
            y[i] = static_cast<int>(u(rng) * classes);
        }
        TrainedModel m = init_model(rows, classes, static_cast<std::uint64_t>(inst));
        std::normal_distribution<double> g(0.0, 0.8);
        for (auto& w : m.w) w = g(rng);
        std::vector<double> gw, gb;
        softmax_mse(m, x, y, &gw, &gb);
        for (std::size_t k = 0; k < m.w.size(); ++k) {
            const double saved = m.w[k];
            const double fd = oracle::central_difference(
                [&](double v) {
                    m.w[k] = v;
                    return softmax_mse(m, x, y);
                },
                saved, 1e-5);
            m.w[k] = saved;
            worst_g = std::max(worst_g, std::abs(gw[k] - fd) / std::max(std::abs(fd), 1e-3));
        }
    }
    c.check(worst_g <= 1e-6, fmt("softmax-MSE gradient vs central differences: %.3g relative (limit 1e-6)", worst_g));
}

void c9_mapping(Criterion& c) {
    std::mt19937_64 rng(31);
    std::normal_distribution<double> n(0.0, 1.0);
    std::uniform_int_distribution<int> bin(0, 3);
    int agree = 0;
    const int instances = 100;
    for (int inst = 0; inst < instances; ++inst) {
        const std::size_t features = 2, classes = 3, rows = features * 4;
        TrainedModel m = init_model(rows, classes, static_cast<std::uint64_t>(inst));
        for (auto& w : m.w) w = n(rng);
        for (auto& b : m.b) b = n(rng);
        const double k = 1.0;
        const ConductanceMap cm = map_to_conductance(m, k);
        bool all = true;
        for (int s = 0; s < 16; ++s) {
            std::vector<double> x(rows, 0.0);
            x[static_cast<std::size_t>(s / 4)] = 1.0;
            x[4 + static_cast<std::size_t>(s % 4)] = 1.0;
            std::vector<double> cur = cm.bias;
            for (std::size_t i = 0; i < rows; ++i) {
                if (x[i] == 0.0) continue;
                for (std::size_t j = 0; j < classes; ++j) cur[j] += k / cm.resistance[i * classes + j];
            }
            const auto hw = static_cast<std::size_t>(std::max_element(cur.begin(), cur.end()) - cur.begin());
            all = all && hw == m.predict(x);
        }
        agree += all;
    }
    c.check(agree == instances, fmt("%g/%g random 8x3 instances agree with the float argmax on every input", agree, instances));
}

void c10_monotonicity(Criterion& c) {
    const ModelParams& p = params();
    bool set_ok = true;
    for (CellKind k : {CellKind::OneT1R, CellKind::ThreeT1R}) {
        double prev = 0.0;
        for (double d = 0.8; d <= 1.2 + 1e-9; d += 0.01) {
            const double i = set_current(p, k, d).current;
            set_ok = set_ok && i >= prev;
            prev = i;
        }
    }
    c.check(set_ok, "SET current nondecreasing in drive over 0.8..1.2 V (10 mV grid, both cells)");

    bool width_ok = true, drive_ok = true;
    for (CellKind k : {CellKind::OneT1R, CellKind::ThreeT1R}) {
        const VariationSample v = nominal_sample(p.devices(k));
        for (double d : {0.8, 0.9, 1.0, 1.1, 1.2}) {
            double prev = INFINITY;
            for (double w : {1e-7, 1e-6, 1e-5, 1e-4, 1e-3}) {
                const double r = program(p, {k, p.r_initial}, d, w, v).resistance;
                width_ok = width_ok && r <= prev;
                prev = r;
            }
        }
        double prev = INFINITY;
        for (double d = 0.6; d <= 1.3 + 1e-9; d += 0.01) {
            const double r = dc_programmed_resistance(p, k, d);
            drive_ok = drive_ok && r <= prev;
            prev = r;
        }
    }
    c.check(width_ok, "programmed R nonincreasing in pulse width (noise off)");
    c.check(drive_ok, "DC-programmed R nonincreasing in drive over 0.6..1.3 V (noise off)");

    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> u(0.0, 1e-3);
    bool idem = true;
    for (int k = 0; k < 100000; ++k) {
        const double q = quantize_value(u(rng), 50e-9);
        idem = idem && quantize_value(q, 50e-9) == q;
    }
    c.check(idem, "quantization idempotent on 1e5 random currents");

    const RawDataset raw = load_dataset("iris", DPE_SOURCE_DIR "/data/iris.csv");
    const EncodedDataset enc = encode(raw, 4, kSeed);
    const TrainedModel m = train(enc, p.training_for("iris").epochs, p.training_for("iris").lr, kSeed);
    bool tie_ok = true;
    std::string trace;
    for (CellKind k : {CellKind::OneT1R, CellKind::ThreeT1R}) {
        const ReadLut lut(p, k, Accounting::Full);
        const ConductanceMap cm = map_to_conductance(m, lut.transconductance());
        ProgramOptions o;
        o.ideal_write = true;
        Crossbar xb = program_array(p, k, cm.rows, cm.cols, cm.resistance, cm.bias, o);
        double prev = -1.0;
        trace += std::string(to_string(k)) + ":";
        for (double res = 12.5e-9; res <= 1.6e-6; res *= 2.0) {
            xb.adc_resolution = res;
            const double tr = evaluate(xb, enc, enc.test, kSeed).tie_rate;
            tie_ok = tie_ok && tr >= prev;
            prev = tr;
            trace += fmt(" %.1f", tr);
        }
        trace += "  ";
    }
    c.check(tie_ok, "tie rate nondecreasing as ADC coarsens 12.5 nA..1.6 uA (iris, %): " + trace);
}

int run(const std::string& args) {
    const std::string cmd = std::string(DPESIM_PATH) + " " + args + " > /dev/null 2>&1";
    const int rc = std::system(cmd.c_str());
    return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

void c11_determinism(Criterion& c) {
    const fs::path base = fs::temp_directory_path() / "dpe_acceptance_determinism";
    fs::remove_all(base);
    const std::string common = " --seed 3 classify --dataset iris,wine,breast_cancer --data-dir " DPE_SOURCE_DIR "/data";
    const int a = run("--out " + (base / "a").string() + common);
    const int b = run("--out " + (base / "b").string() + common);
    c.check(a == 0 && b == 0, fmt("both classify runs exit 0 (got %g, %g)", a, b));
    if (a != 0 || b != 0) return;
    for (const char* f : {"classification.csv", "confusion.csv"}) {
        const bool same = csv_body((base / "a" / f).string()) == csv_body((base / "b" / f).string());
        c.check(same, std::string(f) + " bodies byte-identical across reruns");
    }
    fs::remove_all(base);
}

}  // namespace

int main() {
    std::vector<std::pair<std::string, std::function<void(Criterion&)>>> all{
        {"READ sweep endpoints", c1_read},
        {"SET sweep endpoints", c2_set},
        {"Monte Carlo READ at 9 kohm, n=1000", c3_monte_carlo},
        {"Pulse-width sensitivity", c4_pulse},
        {"READ comparison at 5 kohm", c5_compare},
        {"Classification accuracy, energy, ties", c6_classification},
        {"Solver vs sweep oracle", c7_solver},
        {"MOSFET continuity and training gradient", c8_continuity_gradient},
        {"Mapping argmax exactness", c9_mapping},
        {"Monotonicity suite", c10_monotonicity},
        {"Determinism of classify", c11_determinism},
    };
    int passed = 0;
    for (std::size_t k = 0; k < all.size(); ++k) {
        Criterion c{static_cast<int>(k + 1), all[k].first};
        try {
            all[k].second(c);
        } catch (const std::exception& e) {
            c.check(false, std::string("exception: ") + e.what());
        }
        std::printf("%s  %2d  %s\n", c.pass ? "PASS" : "FAIL", c.id, c.title.c_str());
        for (const auto& l : c.lines) std::printf("          %s\n", l.c_str());
        std::fflush(stdout);
        passed += c.pass;
    }
    std::printf("acceptance: %d/%zu criteria pass\n", passed, all.size());
    return passed == static_cast<int>(all.size()) ? 0 : 1;
}
