// dpesim: runs the device, array and classification experiments and writes
// CSV tables, SVG plots and a run manifest into the output directory.

#include "dpe/calibration.hpp"
#include "dpe/circuit_solver.hpp"
#include "dpe/experiments.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>

#ifndef DPE_SOURCE_DIR
#define DPE_SOURCE_DIR "."
#endif
#ifndef DPE_VERSION
#define DPE_VERSION "0.0.0"
#endif

namespace fs = std::filesystem;
using namespace dpe;

namespace {

enum Exit { kOk = 0, kConfig = 2, kSolver = 3, kData = 4 };

struct RunConfig {
    std::string config_path;
    std::string out_dir = "results";
    std::uint64_t seed = 1;
    std::string kind = "both";
    std::string accounting = "full";
    bool ideal = false;
    bool no_plot = false;
};

std::string resolve(const std::string& given, const std::string& fallback) {
    if (!given.empty()) return given;
    if (fs::exists(fallback)) return fallback;
    return std::string(DPE_SOURCE_DIR) + "/" + fallback;
}

std::vector<CellKind> kinds_of(const std::string& k) {
    if (k == "both") return {CellKind::OneT1R, CellKind::ThreeT1R};
    return {parse_cell_kind(k)};
}

class Run {
public:
    Run(const RunConfig& rc, std::string command) : rc_(rc), command_(std::move(command)) {
        rc_.config_path = resolve(rc_.config_path, "config/calibrated.yaml");
        params_ = load_params(rc_.config_path);
        hash_ = config_hash(params_);
        fs::create_directories(rc_.out_dir);
    }

    const ModelParams& params() const { return params_; }
    const RunConfig& rc() const { return rc_; }
    Accounting accounting() const { return parse_accounting(rc_.accounting); }

    Meta meta() const {
        return {{"command", command_}, {"seed", std::to_string(rc_.seed)}, {"config_hash", hash_}};
    }

    void csv(const std::string& name, const Table& t) {
        const std::string path = (fs::path(rc_.out_dir) / name).string();
        write_csv_file(path, t, meta());
        outputs_.push_back(name);
        std::cout << "wrote " << path << '\n';
    }

    void svg(const std::string& name, const PlotSpec& spec, const std::vector<Series>& s) {
        if (rc_.no_plot) return;
        write_text_file((fs::path(rc_.out_dir) / name).string(), svg_plot(spec, s));
        outputs_.push_back(name);
    }

    void manifest(const nlohmann::json& extra = {}) {
        nlohmann::json j;
        j["command"] = command_;
        j["seed"] = rc_.seed;
        j["config_path"] = rc_.config_path;
        j["config_hash"] = hash_;
        j["kind"] = rc_.kind;
        j["accounting"] = rc_.accounting;
        j["ideal"] = rc_.ideal;
        j["versions"] = {{"dpesim", DPE_VERSION}, {"config_schema", ModelParams::kVersion},
                         {"compiler", __VERSION__}, {"cxx_standard", __cplusplus}};
        j["outputs"] = outputs_;
        if (!extra.is_null()) j["details"] = extra;
        write_text_file((fs::path(rc_.out_dir) / ("manifest_" + command_ + ".json")).string(), j.dump(2) + "\n");
    }

private:
    RunConfig rc_;
    std::string command_;
    ModelParams params_;
    std::string hash_;
    std::vector<std::string> outputs_;
};

// Series per cell kind (and optionally per extra key column) from a table.
std::vector<Series> series_from(const Table& t, std::size_t xcol, std::size_t ycol, int keycol = -1,
                                const std::string& key_prefix = "") {
    std::map<std::string, Series> by;
    std::vector<std::string> order;
    for (const auto& r : t.rows) {
        std::string name = r[0];
        if (keycol >= 0) name += " " + key_prefix + r[static_cast<std::size_t>(keycol)];
        if (!by.count(name)) order.push_back(name);
        Series& s = by[name];
        s.name = name;
        s.x.push_back(std::stod(r[xcol]));
        s.y.push_back(std::stod(r[ycol]));
    }
    std::vector<Series> out;
    for (const auto& n : order) out.push_back(by[n]);
    return out;
}

int cmd_sweep_set(const RunConfig& rc, const std::vector<double>& drives) {
    Run run(rc, "sweep-set");
    const Table t = sweep_set(run.params(), kinds_of(rc.kind), drives);
    run.csv("sweep_set.csv", t);
    run.svg("sweep_set_current.svg", {"SET current vs drive", "drive (V)", "I_set (uA)"}, series_from(t, 1, 2));
    run.svg("sweep_set_power.svg", {"SET power vs drive", "drive (V)", "P_set (uW)"}, series_from(t, 1, 4));
    run.manifest();
    return kOk;
}

int cmd_sweep_read(const RunConfig& rc, const std::vector<double>& r_kohm) {
    Run run(rc, "sweep-read");
    std::vector<double> r;
    for (double k : r_kohm) r.push_back(k * 1e3);
    const Table t = sweep_read(run.params(), kinds_of(rc.kind), r, run.accounting());
    run.csv("sweep_read.csv", t);
    for (CellKind k : kinds_of(rc.kind)) {
        Table sub{t.header, {}};
        for (const auto& row : t.rows) {
            if (row[0] == (k == CellKind::OneT1R ? "1T1R" : "3T1R")) sub.rows.push_back(row);
        }
        const std::string tag(to_string(k));
        run.svg("sweep_read_current_" + tag + ".svg", {"READ current " + sub.rows[0][0], "R (kohm)", "I_out (uA)"},
                series_from(sub, 1, 2));
        run.svg("sweep_read_power_" + tag + ".svg", {"READ power " + sub.rows[0][0], "R (kohm)", "P (uW)"},
                series_from(sub, 1, 4));
    }
    run.manifest();
    return kOk;
}

int cmd_monte_carlo(const RunConfig& rc, double r_kohm, std::size_t n, std::size_t bins) {
    Run run(rc, "monte-carlo");
    nlohmann::json details;
    for (CellKind k : kinds_of(rc.kind)) {
        const auto t0 = std::chrono::steady_clock::now();
        const McStats s = monte_carlo_read(run.params(), k, r_kohm * 1e3, n, rc.seed, bins);
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        const std::string tag(to_string(k));
        run.csv("monte_carlo_" + tag + "_stats.csv", monte_carlo_stats(k, r_kohm * 1e3, s));
        const Table h = monte_carlo_histogram(s);
        run.csv("monte_carlo_" + tag + "_hist.csv", h);
        Series bars{"count", {}, {}};
        for (const auto& row : h.rows) {
            bars.x.push_back(std::stod(row[0]));
            bars.y.push_back(std::stod(row[2]));
        }
        run.svg("monte_carlo_" + tag + ".svg",
                {"READ current at " + fmt_num(r_kohm) + " kohm, " + tag, "I_out (uA)", "count", false, true}, {bars});
        details[tag] = {{"seconds", secs}, {"mean_uA", s.mean * 1e6}, {"std_uA", s.std * 1e6}};
        std::cout << tag << ": mean " << s.mean * 1e6 << " uA, std " << s.std * 1e6 << " uA (" << secs << " s)\n";
    }
    run.manifest(details);
    return kOk;
}

int cmd_pulse_width(const RunConfig& rc, const std::vector<double>& drives, const std::vector<double>& widths) {
    Run run(rc, "pulse-width");
    const Table t = pulse_width(run.params(), kinds_of(rc.kind), drives, widths);
    run.csv("pulse_width.csv", t);
    run.svg("pulse_width.svg", {"Programmed resistance vs pulse width", "pulse width (s)", "R (kohm)", true},
            series_from(t, 2, 3, 1, "@"));
    run.manifest();
    return kOk;
}

int cmd_compare(const RunConfig& rc, double r_kohm) {
    Run run(rc, "compare");
    run.csv("compare.csv", compare(run.params(), run.accounting(), r_kohm * 1e3));
    run.manifest();
    return kOk;
}

int cmd_classify(const RunConfig& rc, const std::vector<std::string>& datasets, const std::string& data_dir,
                 bool program_noise) {
    Run run(rc, "classify");
    ClassifyOptions o;
    o.seed = rc.seed;
    o.data_dir = resolve(data_dir, "data");
    o.kinds = kinds_of(rc.kind);
    o.accounting = run.accounting();
    o.ideal = rc.ideal;
    o.program_noise = program_noise;
    std::vector<ClassifyReport> reps;
    nlohmann::json details;
    for (const auto& d : datasets) {
        const auto t0 = std::chrono::steady_clock::now();
        reps.push_back(classify(run.params(), d, o));
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        const auto& r = reps.back();
        for (const auto& w : r.warnings) std::cerr << d << ": " << w << '\n';
        details[d] = {{"epochs", r.settings.epochs}, {"lr", r.settings.lr}, {"seconds", secs}};
        std::cout << d << ": float test " << r.float_test.accuracy << "%";
        for (const auto& k : r.kinds) {
            std::cout << ", " << to_string(k.kind) << " test " << k.test.accuracy << "% ties " << k.test.tie_rate
                      << "%";
        }
        std::cout << '\n';
    }
    run.csv("classification.csv", classification_table(reps));
    run.csv("confusion.csv", confusion_table(reps));
    for (const auto& r : reps) {
        for (const auto& k : r.kinds) {
            const std::string stem = "crossbar_" + r.dataset + "_" + std::string(to_string(k.kind));
            save_crossbar(k.crossbar, (fs::path(rc.out_dir) / (stem + ".csv")).string(),
                          (fs::path(rc.out_dir) / (stem + ".json")).string());
        }
        Series loss{r.dataset, {}, r.model.loss_trace};
        for (std::size_t e = 0; e < loss.y.size(); ++e) loss.x.push_back(static_cast<double>(e + 1));
        run.svg("loss_" + r.dataset + ".svg", {"Training loss, " + r.dataset, "epoch", "softmax MSE"}, {loss});
    }
    run.manifest(details);
    return kOk;
}

int cmd_calibrate(const RunConfig& rc, int evaluations, int restarts, std::size_t mc_n, const std::string& out_cfg) {
    Run run(rc, "calibrate");
    CalibrationOptions co;
    co.max_evaluations = evaluations;
    co.restarts = restarts;
    const auto targets = reference_targets(mc_n, 7);
    const std::string cfg_path = out_cfg.empty() ? (fs::path(rc.out_dir) / "calibrated.yaml").string() : out_cfg;
    auto finish = [&](const CalibrationResult& res) {
        Table t{{"target", "unit", "target_value", "achieved", "rel_error", "tolerance", "weight", "within"}, {}};
        for (const auto& r : res.report) {
            t.rows.push_back({r.name, r.unit, fmt_num(r.target), fmt_num(r.achieved), fmt_num(r.rel_error),
                              fmt_num(r.tolerance), fmt_num(r.weight), r.within ? "1" : "0"});
        }
        run.csv("calibration_report.csv", t);
        std::cout << "weighted error " << res.weighted_error << " after " << res.evaluations << " evaluations\n";
        run.manifest({{"weighted_error", res.weighted_error}, {"evaluations", res.evaluations}});
    };
    try {
        const CalibrationResult res = calibrate(targets, run.params(), default_free_parameters(), co);
        save_params(res.params, cfg_path);
        std::cout << "wrote " << cfg_path << '\n';
        finish(res);
        return kOk;
    } catch (const CalibrationDiverged& e) {
        finish(e.result);
        std::cerr << "error: " << e.what() << '\n';
        return kSolver;
    }
}

std::vector<std::string> available_datasets(const std::string& data_dir) {
    std::vector<std::string> out;
    const std::string dir = resolve(data_dir, "data");
    for (const auto& d : known_datasets()) {
        if (fs::exists(fs::path(dir) / d.file)) out.push_back(d.name);
    }
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Memristive dot-product-engine simulator"};
    app.set_version_flag("--version", DPE_VERSION);
    app.require_subcommand(1);

    RunConfig rc;
    app.add_option("--config", rc.config_path, "Parameter YAML (default config/calibrated.yaml)");
    app.add_option("--seed", rc.seed, "Run seed")->capture_default_str();
    app.add_option("--out", rc.out_dir, "Output directory")->capture_default_str();
    app.add_option("--kind", rc.kind, "Cell kind")->check(CLI::IsMember({"1t1r", "3t1r", "both"}))->capture_default_str();
    app.add_option("--accounting", rc.accounting, "READ power accounting")
        ->check(CLI::IsMember({"full", "final-stage"}))
        ->capture_default_str();
    app.add_flag("--ideal", rc.ideal, "Perfect ADC, exact writes, linear cell current (classify)");
    app.add_flag("--no-plot", rc.no_plot, "Skip SVG output");

    std::vector<double> set_drives{0.8, 0.9, 1.0, 1.1, 1.2};
    auto* s_set = app.add_subcommand("sweep-set", "SET current and power vs drive");
    s_set->add_option("--drives", set_drives, "Drive voltages (V)")->delimiter(',');

    std::vector<double> read_r{5, 7.5, 10, 12.5, 15, 17.5, 20};
    auto* s_read = app.add_subcommand("sweep-read", "READ current, power and energy vs resistance");
    s_read->add_option("--resistances", read_r, "Resistances (kohm)")->delimiter(',');

    double mc_r = 9;
    std::size_t mc_n = 1000, mc_bins = 20;
    auto* s_mc = app.add_subcommand("monte-carlo", "READ current under transistor variation");
    s_mc->add_option("--r", mc_r, "Resistance (kohm)")->capture_default_str();
    s_mc->add_option("--n", mc_n, "Samples")->capture_default_str();
    s_mc->add_option("--bins", mc_bins, "Histogram bins")->capture_default_str();

    std::vector<double> pw_drives{0.8, 1.0, 1.2};
    std::vector<double> pw_widths{100e-9, 1e-6, 10e-6, 100e-6, 1e-3};
    auto* s_pw = app.add_subcommand("pulse-width", "Programmed resistance vs SET pulse width");
    s_pw->add_option("--drives", pw_drives, "Drive voltages (V)")->delimiter(',');
    s_pw->add_option("--widths", pw_widths, "Pulse widths (s)")->delimiter(',');

    std::vector<std::string> datasets;
    std::string data_dir;
    bool program_noise = false;
    auto* s_cls = app.add_subcommand("classify", "Train, map and evaluate the crossbar classifier");
    s_cls->add_option("--dataset", datasets, "Datasets (default: every one present)")->delimiter(',');
    s_cls->add_option("--data-dir", data_dir, "Dataset directory (default data/)");
    s_cls->add_flag("--program-noise", program_noise, "Device variation during 3T1R programming");

    int cal_evals = 4000, cal_restarts = 2;
    std::size_t cal_mc = 200;
    std::string cal_out;
    auto* s_cal = app.add_subcommand("calibrate", "Fit model parameters to the reference targets");
    s_cal->add_option("--evaluations", cal_evals, "Objective evaluations per simplex run")->capture_default_str();
    s_cal->add_option("--restarts", cal_restarts, "Simplex restarts")->capture_default_str();
    s_cal->add_option("--mc-n", cal_mc, "Monte Carlo samples per objective evaluation")->capture_default_str();
    s_cal->add_option("--write-config", cal_out, "Calibrated YAML path (default OUT/calibrated.yaml)");

    double cmp_r = 5;
    auto* s_cmp = app.add_subcommand("compare", "READ current, power and energy comparison at one resistance");
    s_cmp->add_option("--r", cmp_r, "Resistance (kohm)")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kConfig;
    }

    try {
        if (*s_set) return cmd_sweep_set(rc, set_drives);
        if (*s_read) return cmd_sweep_read(rc, read_r);
        if (*s_mc) return cmd_monte_carlo(rc, mc_r, mc_n, mc_bins);
        if (*s_pw) return cmd_pulse_width(rc, pw_drives, pw_widths);
        if (*s_cmp) return cmd_compare(rc, cmp_r);
        if (*s_cal) return cmd_calibrate(rc, cal_evals, cal_restarts, cal_mc, cal_out);
        if (*s_cls) {
            if (datasets.empty()) datasets = available_datasets(data_dir);
            if (datasets.empty()) {
                std::cerr << "error: no dataset files found\n";
                return kData;
            }
            return cmd_classify(rc, datasets, data_dir, program_noise);
        }
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kConfig;
    } catch (const ParseError& e) {
        std::cerr << "data error: " << e.what() << '\n';
        return kData;
    } catch (const SchemaError& e) {
        std::cerr << "data error: " << e.what() << '\n';
        return kData;
    } catch (const NoOperatingPoint& e) {
        std::cerr << "solver error: " << e.what() << '\n';
        return kSolver;
    } catch (const TargetUnreachable& e) {
        std::cerr << "programming error: " << e.what() << '\n';
        return kSolver;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return kOk;
}
