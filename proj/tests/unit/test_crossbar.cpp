#include "dpe/crossbar.hpp"
#include "dpe/ml_pipeline.hpp"

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <random>

using namespace dpe;

namespace {

const ModelParams& calibrated() {
    static const ModelParams p = load_params(DPE_SOURCE_DIR "/config/calibrated.yaml");
    return p;
}

Crossbar manual(std::vector<double> currents, double resolution = 50e-9) {
    Crossbar xb;
    xb.rows = 1;
    xb.cols = currents.size();
    xb.resistance.assign(xb.cols, 10e3);
    xb.bias.assign(xb.cols, 0.0);
    xb.cell_current = std::move(currents);
    xb.cell_power.assign(xb.cols, 0.0);
    xb.adc_resolution = resolution;
    return xb;
}

std::vector<double> random_targets(std::mt19937_64& rng, std::size_t n) {
    std::uniform_real_distribution<double> g(1.0 / 20e3, 1.0 / 5e3);
    std::vector<double> t(n);
    for (auto& r : t) r = 1.0 / g(rng);
    return t;
}

}  // namespace

TEST_CASE("READ lookup table stays within 0.1% of the direct solve") {
    const ModelParams& p = calibrated();
    std::mt19937_64 rng(8);
    for (CellKind k : {CellKind::OneT1R, CellKind::ThreeT1R}) {
        for (Accounting a : {Accounting::Full, Accounting::FinalStage}) {
            const ReadLut lut(p, k, a);
            CHECK(lut.size() == 64);
            for (double r : random_targets(rng, 300)) {
                const ReadResult d = read_current(p, {k, r}, a);
                CHECK(std::abs(lut.current(r) - d.i_out) / d.i_out < 1e-3);
                CHECK(std::abs(lut.power(r) - d.power) / d.power < 1e-3);
            }
        }
    }
}

TEST_CASE("column currents: bias, singleton rows, brute-force superposition") {
    const ModelParams& p = calibrated();
    std::mt19937_64 rng(4);
    const std::size_t rows = 6, cols = 3;
    const std::vector<double> bias{1e-6, 0.0, 2.5e-6};
    for (CellKind k : {CellKind::OneT1R, CellKind::ThreeT1R}) {
        ProgramOptions o;
        o.ideal_write = true;
        const Crossbar xb = program_array(p, k, rows, cols, random_targets(rng, rows * cols), bias, o);
        CHECK(column_currents(xb, std::vector<std::uint8_t>(rows, 0)) == bias);
        std::vector<std::uint8_t> one(rows, 0);
        one[2] = 1;
        const auto c1 = column_currents(xb, one);
        for (std::size_t j = 0; j < cols; ++j) CHECK(c1[j] == bias[j] + xb.cell_current[2 * cols + j]);

        std::bernoulli_distribution on(0.5);
        for (int trial = 0; trial < 20; ++trial) {
            std::vector<std::uint8_t> s(rows);
            for (auto& b : s) b = on(rng);
            const auto c = column_currents(xb, s);
            for (std::size_t j = 0; j < cols; ++j) {
                double expect = bias[j];
                for (std::size_t i = 0; i < rows; ++i) {
                    if (s[i]) expect += read_current(p, {k, xb.r(i, j)}).i_out;
                }
                CHECK(std::abs(c[j] - expect) <= 1e-3 * expect);
            }
        }
        CHECK_THROWS_AS(column_currents(xb, std::vector<std::uint8_t>(rows + 1, 0)), std::invalid_argument);
    }
}

TEST_CASE("floor quantization and its idempotence") {
    CHECK(quantize(2.90e-6, 50e-9) == 58);
    CHECK(quantize(2.85e-6, 50e-9) == 57);
    CHECK(quantize(2.899e-6, 50e-9) == 57);
    CHECK(quantize(2.899e-6, 50e-9, AdcMode::Round) == 58);
    CHECK_THROWS_AS(quantize(1e-6, 0.0), std::invalid_argument);
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(0.0, 1e-3);
    for (int k = 0; k < 10000; ++k) {
        const double x = u(rng);
        for (AdcMode m : {AdcMode::Floor, AdcMode::Round}) {
            const double q = quantize_value(x, 50e-9, m);
            CHECK(quantize_value(q, 50e-9, m) == q);
        }
    }
}

TEST_CASE("tie example from equal quantized levels") {
    const Crossbar xb = manual({2.90e-6, 2.85e-6, 2.90e-6});
    const InferenceResult r = infer(xb, {1}, 1, 0);
    CHECK(r.levels == std::vector<long long>{58, 57, 58});
    CHECK(r.tie);
    CHECK(r.tied == std::vector<std::size_t>{0, 2});
    CHECK((r.winner == 0 || r.winner == 2));
    CHECK(infer(xb, {1}, 1, 0).winner == r.winner);
    int zero = 0;
    for (std::uint64_t i = 0; i < 400; ++i) zero += infer(xb, {1}, 7, i).winner == 0;
    CHECK(zero > 150);
    CHECK(zero < 250);
}

TEST_CASE("single active row picks the lowest resistance") {
    const ModelParams& p = calibrated();
    ProgramOptions o;
    o.ideal_write = true;
    const Crossbar xb = program_array(p, CellKind::ThreeT1R, 1, 3, {5e3, 10e3, 20e3}, {0, 0, 0}, o);
    CHECK(infer(xb, {1}, 0, 0).winner == 0);
}

TEST_CASE("ideal ADC compares raw currents") {
    Crossbar xb = manual({2.901e-6, 2.85e-6, 2.9e-6}, 0.0);
    const InferenceResult r = infer(xb, {1}, 1, 0);
    CHECK_FALSE(r.tie);
    CHECK(r.winner == 0);
    CHECK(r.levels.empty());
    xb.adc_resolution = 50e-9;
    CHECK(infer(xb, {1}, 1, 0).tie);
}

TEST_CASE("tie rate never drops as the ADC coarsens") {
    const ModelParams& p = calibrated();
    const RawDataset raw = load_dataset("iris", DPE_SOURCE_DIR "/data/iris.csv");
    const EncodedDataset enc = encode(raw, 4, 3);
    const TrainedModel m = train(enc, 200, 0.05, 3);
    for (CellKind k : {CellKind::OneT1R, CellKind::ThreeT1R}) {
        const ReadLut lut(p, k, Accounting::Full);
        const ConductanceMap cm = map_to_conductance(m, lut.transconductance());
        ProgramOptions o;
        o.ideal_write = true;
        Crossbar xb = program_array(p, k, cm.rows, cm.cols, cm.resistance, cm.bias, o);
        double prev = -1.0;
        for (double res = 6.25e-9; res <= 1.6e-6; res *= 2.0) {
            xb.adc_resolution = res;
            const double tr = evaluate(xb, enc, enc.test, 3).tie_rate;
            CHECK(tr >= prev);
            prev = tr;
        }
    }
}

TEST_CASE("inference energy is the sum of active-cell READ energies") {
    const ModelParams& p = calibrated();
    std::mt19937_64 rng(12);
    const std::size_t rows = 8, cols = 3;
    const auto targets = random_targets(rng, rows * cols);
    ProgramOptions o;
    o.ideal_write = true;
    const Crossbar a = program_array(p, CellKind::OneT1R, rows, cols, targets, {0, 0, 0}, o);
    const Crossbar b = program_array(p, CellKind::ThreeT1R, rows, cols, targets, {0, 0, 0}, o);
    std::bernoulli_distribution on(0.5);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<std::uint8_t> s(rows);
        for (auto& x : s) x = on(rng);
        s[0] = 1;
        for (const Crossbar* xb : {&a, &b}) {
            double lut_sum = 0.0, direct = 0.0;
            for (std::size_t i = 0; i < rows; ++i) {
                if (!s[i]) continue;
                for (std::size_t j = 0; j < cols; ++j) {
                    lut_sum += xb->cell_power[i * cols + j] * xb->t_read;
                    direct += read_current(p, {xb->kind, xb->r(i, j)}).energy;
                }
            }
            const double e = infer(*xb, s, 0, 0).energy;
            CHECK(e == doctest::Approx(lut_sum).epsilon(1e-12));
            CHECK(std::abs(e - direct) / direct < 1e-3);
        }
        CHECK(infer(b, s, 0, 0).energy < infer(a, s, 0, 0).energy);
    }
    Crossbar with_bias = a;
    with_bias.bias = {1e-6, 2e-6, 0.0};
    with_bias.bias_energy = true;
    const std::vector<std::uint8_t> s(rows, 1);
    CHECK(infer(with_bias, s, 0, 0).energy ==
          doctest::Approx(infer(a, s, 0, 0).energy + 3e-6 * with_bias.bias_supply * a.t_read));
}

TEST_CASE("programming by drive inversion") {
    const ModelParams& p = calibrated();
    std::mt19937_64 rng(2);
    const auto targets = random_targets(rng, 40);
    const Crossbar xb = program_array(p, CellKind::ThreeT1R, 8, 5, targets, std::vector<double>(5, 0.0));
    for (std::size_t k = 0; k < targets.size(); ++k) {
        CHECK(std::abs(xb.resistance[k] - targets[k]) / targets[k] < 0.01);
    }
    CHECK_THROWS_AS(program_array(p, CellKind::ThreeT1R, 1, 1, {4e3}, {0.0}), TargetUnreachable);
    CHECK_THROWS_AS(program_array(p, CellKind::ThreeT1R, 1, 1, {25e3}, {0.0}), TargetUnreachable);
    CHECK_THROWS_AS(program_array(p, CellKind::ThreeT1R, 1, 1, {10e3}, {-1.0}), std::invalid_argument);
    // The 1T1R DC programming floor sits above the low end of the window.
    CHECK_THROWS_AS(program_array(p, CellKind::OneT1R, 1, 1, {5e3}, {0.0}), TargetUnreachable);
}

TEST_CASE("programming noise matches the LRS spread at the drive") {
    ModelParams p = calibrated();
    for (auto& f : p.three_t1r.fets) f.sigma_vth = f.sigma_kp_rel = 0.0;
    const std::size_t n = 1000;
    ProgramOptions o;
    o.noise = true;
    o.seed = 17;
    const Crossbar xb = program_array(p, CellKind::ThreeT1R, n, 1, std::vector<double>(n, 10e3), {0.0}, o);
    double m = 0.0, m2 = 0.0;
    for (double r : xb.resistance) {
        m += r;
        m2 += r * r;
    }
    m /= n;
    const double rel = std::sqrt((m2 / n - m * m) * n / (n - 1)) / m;
    const ProgrammingMap map(p, CellKind::ThreeT1R);
    const double sigma = p.memristor.lrs_noise.sigma_at(map.drive_for(10e3));
    CHECK(rel == doctest::Approx(sigma).epsilon(0.25));
    CHECK(m == doctest::Approx(10e3).epsilon(0.02));
}

TEST_CASE("crossbar export and import round-trip") {
    const ModelParams& p = calibrated();
    std::mt19937_64 rng(6);
    ProgramOptions o;
    o.ideal_write = true;
    Crossbar xb = program_array(p, CellKind::ThreeT1R, 4, 3, random_targets(rng, 12), {1e-7, 0, 3e-7}, o);
    xb.adc_mode = AdcMode::Round;
    const auto dir = std::filesystem::temp_directory_path() / "dpe_xb_test";
    std::filesystem::create_directories(dir);
    save_crossbar(xb, (dir / "x.csv").string(), (dir / "x.json").string());
    const Crossbar back = load_crossbar(p, (dir / "x.csv").string(), (dir / "x.json").string());
    CHECK(back.resistance == xb.resistance);
    CHECK(back.bias == xb.bias);
    CHECK(back.cell_current == xb.cell_current);
    CHECK(back.adc_mode == AdcMode::Round);
    CHECK(back.kind == xb.kind);
    std::filesystem::remove_all(dir);
}
