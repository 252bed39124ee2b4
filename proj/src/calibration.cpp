#include "dpe/calibration.hpp"

#include "dpe/cell_models.hpp"

#include <gsl/gsl_errno.h>
#include <gsl/gsl_multimin.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <ostream>

namespace dpe {

namespace {

constexpr double kInfeasible = 1e12;

double target_term(const CalibrationTarget& t, double achieved) {
    const double e = (achieved - t.target) / (t.target * t.tolerance);
    return t.weight * e * e;
}

struct Problem {
    const std::vector<CalibrationTarget>* targets;
    const std::vector<FreeParameter>* free;
    ModelParams base;
    double best = std::numeric_limits<double>::infinity();
    std::vector<double> best_x;
    int evaluations = 0;
};

double to_internal(const FreeParameter& f, double v) {
    return f.log_scale ? std::log(v) : v;
}

double from_internal(const FreeParameter& f, double x) {
    return f.log_scale ? std::exp(x) : x;
}

double objective(const gsl_vector* x, void* data) {
    auto* pb = static_cast<Problem*>(data);
    ++pb->evaluations;
    ModelParams p = pb->base;
    double penalty = 0.0;
    for (std::size_t i = 0; i < pb->free->size(); ++i) {
        const FreeParameter& f = (*pb->free)[i];
        double v = from_internal(f, gsl_vector_get(x, i));
        if (!std::isfinite(v)) return kInfeasible;
        const double span = f.hi - f.lo;
        if (v < f.lo) {
            penalty += 1e4 * std::pow((f.lo - v) / span, 2);
            v = f.lo;
        } else if (v > f.hi) {
            penalty += 1e4 * std::pow((v - f.hi) / span, 2);
            v = f.hi;
        }
        f.set(p, v);
    }
    double err = kInfeasible;
    try {
        err = weighted_error(*pb->targets, p) + penalty;
    } catch (const std::exception&) {
        return kInfeasible;
    }
    if (!std::isfinite(err)) return kInfeasible;
    if (err < pb->best) {
        pb->best = err;
        pb->best_x.assign(x->data, x->data + pb->free->size());
    }
    return err;
}

ModelParams apply(const ModelParams& base, const std::vector<FreeParameter>& free, const std::vector<double>& x) {
    ModelParams p = base;
    for (std::size_t i = 0; i < free.size(); ++i) {
        free[i].set(p, std::clamp(from_internal(free[i], x[i]), free[i].lo, free[i].hi));
    }
    return p;
}

struct MinimizerDeleter {
    void operator()(gsl_multimin_fminimizer* m) const { gsl_multimin_fminimizer_free(m); }
};
struct VectorDeleter {
    void operator()(gsl_vector* v) const { gsl_vector_free(v); }
};

}  // namespace

double weighted_error(const std::vector<CalibrationTarget>& targets, const ModelParams& p) {
    EvalCache cache;
    double sum = 0.0;
    for (const auto& t : targets) sum += target_term(t, t.observe(p, cache));
    return sum;
}

std::vector<ReportRow> evaluate_targets(const std::vector<CalibrationTarget>& targets, const ModelParams& p) {
    EvalCache cache;
    std::vector<ReportRow> rows;
    for (const auto& t : targets) {
        const double a = t.observe(p, cache);
        ReportRow r;
        r.name = t.name;
        r.unit = t.unit;
        r.target = t.target * t.unit_scale;
        r.achieved = a * t.unit_scale;
        r.rel_error = (a - t.target) / t.target;
        r.tolerance = t.tolerance;
        r.weight = t.weight;
        r.within = std::abs(r.rel_error) <= t.tolerance;
        rows.push_back(r);
    }
    return rows;
}

CalibrationResult calibrate(const std::vector<CalibrationTarget>& targets, const ModelParams& initial,
                            const std::vector<FreeParameter>& free, const CalibrationOptions& opts) {
    if (targets.empty()) throw std::invalid_argument("calibrate: no targets");
    CalibrationResult result;
    result.params = initial;

    const double initial_error = weighted_error(targets, initial);
    result.weighted_error = initial_error;
    if (initial_error == 0.0 || free.empty()) {
        result.report = evaluate_targets(targets, initial);
        result.evaluations = 1;
        if (result.weighted_error > opts.max_weighted_error) {
            throw CalibrationDiverged("calibration error above bound", result);
        }
        return result;
    }

    gsl_set_error_handler_off();
    Problem pb{&targets, &free, initial, 0.0, {}, 0};
    const std::size_t n = free.size();
    std::vector<double> x(n);
    for (std::size_t i = 0; i < n; ++i) x[i] = to_internal(free[i], free[i].get(initial));
    pb.best = initial_error;
    pb.best_x = x;

    std::unique_ptr<gsl_vector, VectorDeleter> gx(gsl_vector_alloc(n));
    std::unique_ptr<gsl_vector, VectorDeleter> step(gsl_vector_alloc(n));
    for (std::size_t i = 0; i < n; ++i) {
        gsl_vector_set(step.get(), i, free[i].log_scale ? 0.1 : 0.05 * (free[i].hi - free[i].lo));
    }

    gsl_multimin_function fn{&objective, n, &pb};
    const int per_round = std::max(1, opts.max_evaluations / std::max(1, opts.restarts + 1));
    // Restarting from the best point rebuilds a fresh simplex, which helps
    // Nelder-Mead escape the collapsed simplices it tends to stall in.
    for (int round = 0; round <= opts.restarts; ++round) {
        for (std::size_t i = 0; i < n; ++i) gsl_vector_set(gx.get(), i, pb.best_x[i]);
        std::unique_ptr<gsl_multimin_fminimizer, MinimizerDeleter> m(
            gsl_multimin_fminimizer_alloc(gsl_multimin_fminimizer_nmsimplex2, n));
        gsl_multimin_fminimizer_set(m.get(), &fn, gx.get(), step.get());
        const int start = pb.evaluations;
        while (pb.evaluations - start < per_round) {
            if (gsl_multimin_fminimizer_iterate(m.get()) != GSL_SUCCESS) break;
            if (gsl_multimin_test_size(gsl_multimin_fminimizer_size(m.get()), opts.simplex_tol) == GSL_SUCCESS) break;
        }
    }

    result.params = apply(initial, free, pb.best_x);
    result.weighted_error = weighted_error(targets, result.params);
    result.report = evaluate_targets(targets, result.params);
    result.evaluations = pb.evaluations;
    if (result.weighted_error > opts.max_weighted_error) {
        throw CalibrationDiverged("calibration error " + std::to_string(result.weighted_error) + " above bound " +
                                      std::to_string(opts.max_weighted_error),
                                  result);
    }
    return result;
}

namespace {

double cached(EvalCache& cache, const std::string& key, const std::function<double()>& f) {
    if (auto it = cache.find(key); it != cache.end()) return it->second;
    const double v = f();
    cache[key] = v;
    return v;
}

Observable read_out(CellKind kind, double r) {
    return [=](const ModelParams& p, EvalCache&) { return read_current(p, {kind, r}).i_out; };
}

Observable mc_stat(CellKind kind, double r, std::size_t n, std::uint64_t seed, bool want_std) {
    return [=](const ModelParams& p, EvalCache& cache) {
        const std::string key = std::string("mc_") + std::string(to_string(kind));
        if (!cache.count(key + "_mean")) {
            const McStats s = monte_carlo_read(p, kind, r, n, seed);
            cache[key + "_mean"] = s.mean;
            cache[key + "_std"] = s.std;
        }
        return cache[key + (want_std ? "_std" : "_mean")];
    };
}

Observable set_obs(CellKind kind, double drive, bool power) {
    return [=](const ModelParams& p, EvalCache& cache) {
        const std::string key = "set_" + std::string(to_string(kind)) + "_" + std::to_string(drive);
        cached(cache, key, [&] {
            const SetResult s = set_current(p, kind, drive);
            cache[key + "_p"] = s.power;
            return s.current;
        });
        return cache[key + (power ? "_p" : "")];
    };
}

Observable pulse_obs(double drive, double width) {
    return [=](const ModelParams& p, EvalCache&) {
        const CellInstance c0{CellKind::OneT1R, p.r_initial};
        return program(p, c0, drive, width, nominal_sample(p.one_t1r)).resistance;
    };
}

}  // namespace

std::vector<CalibrationTarget> reference_targets(std::size_t mc_n, std::uint64_t mc_seed) {
    using K = CellKind;
    std::vector<CalibrationTarget> t;
    auto add = [&](std::string name, Observable o, double target, double tol, double weight, std::string unit,
                   double scale) {
        t.push_back({std::move(name), std::move(o), target, tol, weight, std::move(unit), scale});
    };
    // The 1T1R 20 kOhm READ current, 9 kOhm Monte Carlo mean and 0.8 V SET
    // current cannot all be met by an ohmic memristor in series with one
    // transistor; they are down-weighted so they do not drag the rest.
    add("read_1t1r_5k", read_out(K::OneT1R, 5e3), 110e-6, 0.05, 1.0, "uA", 1e6);
    add("read_1t1r_20k", read_out(K::OneT1R, 20e3), 35e-6, 0.05, 0.25, "uA", 1e6);
    add("read_3t1r_5k", read_out(K::ThreeT1R, 5e3), 3.005e-6, 0.05, 1.0, "uA", 1e6);
    add("read_3t1r_20k", read_out(K::ThreeT1R, 20e3), 2.833e-6, 0.05, 1.0, "uA", 1e6);
    add("total_3t1r_5k",
        [](const ModelParams& p, EvalCache&) {
            const ReadResult r = read_current(p, {K::ThreeT1R, 5e3});
            return r.i_in + r.i_out;
        },
        4.459e-6, 0.10, 1.0, "uA", 1e6);
    add("power_ratio_5k",
        [](const ModelParams& p, EvalCache&) {
            return read_current(p, {K::OneT1R, 5e3}).power / read_current(p, {K::ThreeT1R, 5e3}).power;
        },
        9.37, 0.15, 1.0, "x", 1.0);
    // Pulls against the ratio above: with the 5 kOhm 1T1R current at its READ
    // target, a 9.37x ratio wants ~7 uW here.
    add("power_3t1r_5k", [](const ModelParams& p, EvalCache&) { return read_current(p, {K::ThreeT1R, 5e3}).power; },
        5.35e-6, 0.15, 1.0, "uW", 1e6);
    add("mc_1t1r_mean", mc_stat(K::OneT1R, 9e3, mc_n, mc_seed, false), 54.5e-6, 0.10, 0.25, "uA", 1e6);
    add("mc_1t1r_std", mc_stat(K::OneT1R, 9e3, mc_n, mc_seed, true), 0.452e-6, 0.25, 1.0, "uA", 1e6);
    add("mc_3t1r_mean", mc_stat(K::ThreeT1R, 9e3, mc_n, mc_seed, false), 2.85e-6, 0.10, 1.0, "uA", 1e6);
    add("mc_3t1r_std", mc_stat(K::ThreeT1R, 9e3, mc_n, mc_seed, true), 0.181e-6, 0.25, 1.0, "uA", 1e6);
    add("set_1t1r_0.8", set_obs(K::OneT1R, 0.8, false), 7e-6, 0.10, 0.25, "uA", 1e6);
    add("set_1t1r_1.2", set_obs(K::OneT1R, 1.2, false), 132e-6, 0.10, 1.0, "uA", 1e6);
    add("set_3t1r_0.8", set_obs(K::ThreeT1R, 0.8, false), 35e-6, 0.10, 1.0, "uA", 1e6);
    add("set_3t1r_1.2", set_obs(K::ThreeT1R, 1.2, false), 292e-6, 0.10, 1.0, "uA", 1e6);
    add("set_power_1t1r_0.8", set_obs(K::OneT1R, 0.8, true), 5e-6, 0.20, 0.25, "uW", 1e6);
    add("set_power_1t1r_1.2", set_obs(K::OneT1R, 1.2, true), 160e-6, 0.20, 0.25, "uW", 1e6);
    add("set_power_3t1r_0.8", set_obs(K::ThreeT1R, 0.8, true), 115e-6, 0.20, 0.25, "uW", 1e6);
    add("set_power_3t1r_1.2", set_obs(K::ThreeT1R, 1.2, true), 964e-6, 0.20, 0.25, "uW", 1e6);
    add("pulse_1t1r_100ns", pulse_obs(0.8, 100e-9), 100e3, 0.20, 1.0, "kOhm", 1e-3);
    add("pulse_1t1r_1ms", pulse_obs(0.8, 1e-3), 30e3, 0.20, 1.0, "kOhm", 1e-3);
    return t;
}

std::vector<FreeParameter> default_free_parameters() {
    std::vector<FreeParameter> f;
    auto fet_params = [&](const std::string& prefix, CellKind kind, Role role, double vth_hi) {
        auto dev = [kind, role](ModelParams& p) -> MosfetParams& { return p.devices(kind)[role]; };
        auto cdev = [kind, role](const ModelParams& p) -> const MosfetParams& { return p.devices(kind)[role]; };
        f.push_back({prefix + ".vth", [=](const ModelParams& p) { return cdev(p).vth; },
                     [=](ModelParams& p, double v) { dev(p).vth = v; }, 0.2, vth_hi, false});
        f.push_back({prefix + ".kp", [=](const ModelParams& p) { return cdev(p).kp; },
                     [=](ModelParams& p, double v) { dev(p).kp = v; }, 1e-7, 1e-1, true});
        f.push_back({prefix + ".lambda", [=](const ModelParams& p) { return cdev(p).lambda; },
                     [=](ModelParams& p, double v) { dev(p).lambda = v; }, 0.0, 0.3, false});
    };
    fet_params("one_t1r.mn1", CellKind::OneT1R, Role::MN1, 1.1);
    fet_params("three_t1r.mn1", CellKind::ThreeT1R, Role::MN1, 1.0);
    fet_params("three_t1r.mn2", CellKind::ThreeT1R, Role::MN2, 1.0);
    fet_params("three_t1r.mp3", CellKind::ThreeT1R, Role::MP3, 1.0);

    f.push_back({"memristor.a_rate", [](const ModelParams& p) { return p.memristor.a_rate; },
                 [](ModelParams& p, double v) { p.memristor.a_rate = v; }, 1e-12, 1e3, true});
    f.push_back({"memristor.v0", [](const ModelParams& p) { return p.memristor.v0; },
                 [](ModelParams& p, double v) { p.memristor.v0 = v; }, 1e-3, 0.05, false});
    f.push_back({"read.vdd", [](const ModelParams& p) { return p.read.vdd; },
                 [](ModelParams& p, double v) { p.read.vdd = v; }, 1.0, 2.0, false});

    // One variation magnitude shared by every transistor in both cells.
    auto all_fets = [](ModelParams& p, auto&& fn) {
        fn(p.one_t1r[Role::MN1]);
        for (Role r : {Role::MN1, Role::MN2, Role::MP3}) fn(p.three_t1r[r]);
    };
    f.push_back({"sigma_vth", [](const ModelParams& p) { return p.one_t1r[Role::MN1].sigma_vth; },
                 [=](ModelParams& p, double v) { all_fets(p, [v](MosfetParams& m) { m.sigma_vth = v; }); }, 0.0,
                 0.1, false});
    f.push_back({"sigma_kp_rel", [](const ModelParams& p) { return p.one_t1r[Role::MN1].sigma_kp_rel; },
                 [=](ModelParams& p, double v) { all_fets(p, [v](MosfetParams& m) { m.sigma_kp_rel = v; }); },
                 0.0, 0.3, false});
    return f;
}

void write_report_csv(std::ostream& out, const std::vector<ReportRow>& rows) {
    out << "target,unit,target_value,achieved,rel_error,tolerance,weight,within\n";
    for (const auto& r : rows) {
        out << r.name << ',' << r.unit << ',' << r.target << ',' << r.achieved << ',' << r.rel_error << ','
            << r.tolerance << ',' << r.weight << ',' << (r.within ? "yes" : "no") << '\n';
    }
}

}  // namespace dpe
