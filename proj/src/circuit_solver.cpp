#include "dpe/circuit_solver.hpp"

#include <algorithm>
#include <cmath>

namespace dpe {

namespace {

constexpr double kMinR = 100.0;
constexpr double kMaxR = 10e6;

void check_inputs(const CellTopology& top, double r) {
    if (!(r >= kMinR && r <= kMaxR)) {
        throw std::invalid_argument("memristor resistance outside [100 ohm, 10 Mohm]: " + std::to_string(r));
    }
    const Rails& k = top.rails;
    for (double v : {k.vdd, k.v_in, k.v_g, k.v_readb, k.v_column}) {
        if (!std::isfinite(v)) throw std::invalid_argument("non-finite rail voltage");
    }
}

struct Branches {
    MosfetEval mn1;
    MosfetEval mp3;
    double i_mem = 0.0;
};

Branches branches(const CellTopology& top, double r, const DeviceSet& dev, double vt, double vb) {
    Branches b;
    b.i_mem = (vt - vb) / r;
    if (top.kind == CellKind::OneT1R) {
        b.mn1 = mosfet_eval(dev[Role::MN1], top.rails.v_g, vb);
    } else {
        b.mn1 = mosfet_eval(dev[Role::MN1], top.rails.v_in, vb);
        const Rails& k = top.rails;
        b.mp3 = mosfet_eval(dev[Role::MP3], k.v_readb - k.vdd, vt - k.vdd);
    }
    return b;
}

DcSolution finish(const CellTopology& top, double r, const DeviceSet& dev, double vt, double vb) {
    DcSolution s;
    s.v_top = vt;
    s.v_bottom = vb;
    const Branches b = branches(top, r, dev, vt, vb);
    s.i_mem = b.i_mem;
    s.i_mn1 = b.mn1.id;
    if (top.kind == CellKind::ThreeT1R) {
        s.i_mp3 = -b.mp3.id;
        s.i_mn2 = mosfet_drain_current(dev[Role::MN2], vb, top.rails.v_column);
    }
    s.residual = kcl_residual(top, r, dev, vt, vb).max_abs();
    return s;
}

bool newton(const CellTopology& top, double r, const DeviceSet& dev, const SolverOptions& o, double& vt,
            double& vb, int& iters) {
    const bool one = top.kind == CellKind::OneT1R;
    const double g = 1.0 / r;
    auto residual = [&](double t, double b) { return kcl_residual(top, r, dev, t, b); };
    KclResidual f = residual(vt, vb);
    for (iters = 0; iters < o.max_newton; ++iters) {
        if (f.max_abs() < o.tol_kcl) return true;
        const Branches br = branches(top, r, dev, vt, vb);
        double dt = 0.0;
        double db = 0.0;
        if (one) {
            const double jac = -g - br.mn1.gds - o.gmin;
            db = -f.bottom / jac;
        } else {
            // f_top = -I_D(MP3) - (t - b)/R ; f_bottom = (t - b)/R - I_D(MN1)
            const double a11 = -br.mp3.gds - g - o.gmin;
            const double a12 = g;
            const double a21 = g;
            const double a22 = -g - br.mn1.gds - o.gmin;
            const double det = a11 * a22 - a12 * a21;
            if (det == 0.0 || !std::isfinite(det)) return false;
            dt = (-f.top * a22 + f.bottom * a12) / det;
            db = (-f.bottom * a11 + f.top * a21) / det;
        }
        const double biggest = std::max(std::abs(dt), std::abs(db));
        if (!std::isfinite(biggest)) return false;
        if (biggest > o.max_step) {
            const double s = o.max_step / biggest;
            dt *= s;
            db *= s;
        }
        // Residual damping: halve the step while the residual grows.
        double scale = 1.0;
        KclResidual trial = residual(vt + dt, vb + db);
        for (int k = 0; k < 8 && trial.max_abs() > f.max_abs(); ++k) {
            scale *= 0.5;
            trial = residual(vt + scale * dt, vb + scale * db);
        }
        vt += scale * dt;
        vb += scale * db;
        f = trial;
    }
    return f.max_abs() < o.tol_kcl;
}

// Root of a decreasing function on [lo, hi] by bisection.
template <typename F>
double bisect(F&& f, double lo, double hi) {
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (mid == lo || mid == hi) break;
        if (f(mid) > 0.0) lo = mid;
        else hi = mid;
    }
    return 0.5 * (lo + hi);
}

bool fallback(const CellTopology& top, double r, const DeviceSet& dev, double& vt, double& vb) {
    if (top.kind == CellKind::OneT1R) {
        const double v_in = top.rails.v_in;
        vt = v_in;
        const double lo = std::min(0.0, v_in);
        const double hi = std::max(0.0, v_in);
        vb = bisect([&](double b) { return kcl_residual(top, r, dev, v_in, b).bottom; }, lo, hi);
        return true;
    }
    const double vdd = top.rails.vdd;
    auto top_for = [&](double b) {
        const double lo = std::min(b, vdd);
        const double hi = std::max(b, vdd);
        return bisect([&](double t) { return kcl_residual(top, r, dev, t, b).top; }, lo, hi);
    };
    const double lo = std::min(0.0, vdd);
    const double hi = std::max(0.0, vdd);
    vb = bisect([&](double b) { return kcl_residual(top, r, dev, top_for(b), b).bottom; }, lo, hi);
    vt = top_for(vb);
    return true;
}

}  // namespace

double KclResidual::max_abs() const {
    return std::max(std::abs(top), std::abs(bottom));
}

KclResidual kcl_residual(const CellTopology& top, double r, const DeviceSet& dev, double vt, double vb) {
    KclResidual f;
    if (top.kind == CellKind::OneT1R) {
        vt = top.rails.v_in;
        f.bottom = (vt - vb) / r - mosfet_drain_current(dev[Role::MN1], top.rails.v_g, vb);
        return f;
    }
    const Rails& k = top.rails;
    const double i_mem = (vt - vb) / r;
    f.top = -mosfet_drain_current(dev[Role::MP3], k.v_readb - k.vdd, vt - k.vdd) - i_mem;
    f.bottom = i_mem - mosfet_drain_current(dev[Role::MN1], k.v_in, vb);
    return f;
}

DcSolution solve_dc(const CellTopology& top, double r, const VariationSample& vars, const SolverOptions& opts,
                    const DcSolution* warm_start) {
    check_inputs(top, r);
    const DeviceSet dev = vars.apply(top.devices);

    double vt = 0.0;
    double vb = 0.0;
    if (top.kind == CellKind::OneT1R) {
        vt = top.rails.v_in;
        vb = warm_start ? warm_start->v_bottom : 0.5 * top.rails.v_in;
    } else {
        vt = warm_start ? warm_start->v_top : 0.5 * top.rails.vdd;
        vb = warm_start ? warm_start->v_bottom : 0.5 * top.rails.vdd;
    }

    int iters = 0;
    if (newton(top, r, dev, opts, vt, vb, iters)) {
        DcSolution s = finish(top, r, dev, vt, vb);
        s.converged = true;
        s.iterations = iters;
        return s;
    }

    fallback(top, r, dev, vt, vb);
    // Polish the bisection result; it is already close enough for Newton to
    // converge in a couple of steps.
    int polish = 0;
    newton(top, r, dev, opts, vt, vb, polish);
    DcSolution s = finish(top, r, dev, vt, vb);
    s.used_fallback = true;
    s.iterations = iters + polish;
    s.converged = s.residual < opts.tol_kcl;
    if (!s.converged) {
        throw NoOperatingPoint("no DC operating point (residual " + std::to_string(s.residual) + " A)");
    }
    return s;
}

TransientResult transient_set(const CellTopology& top, const MemristorParams& mem, double pulse_amplitude,
                              double pulse_width, const MemristorState& m0, const VariationSample& vars,
                              const TransientOptions& opts) {
    if (!(opts.dt > 0.0)) throw std::invalid_argument("dt must be positive");
    if (pulse_width < 0.0) throw std::invalid_argument("negative pulse width");

    CellTopology driven = top;
    driven.rails.v_in = pulse_amplitude;

    TransientResult out;
    MemristorState state = m0;
    double r = memristor_resistance(mem, state);
    DcSolution sol = solve_dc(driven, r, vars, opts.solver);
    out.peak_current = sol.i_mem;

    double t = 0.0;
    double h_prev = opts.dt;
    // Pulse widths are compared with a relative guard so that float round-off
    // on the accumulated time does not add a sliver step.
    const double t_end = pulse_width * (1.0 - 1e-12);
    while (t < t_end && state.w < 1.0) {
        const double v = sol.v_mem();
        const double rate = set_rate(mem, v);
        if (rate <= 0.0) break;  // below threshold; rails are constant so the state stays frozen
        double h = std::min({opts.max_dw / rate, 2.0 * h_prev, pulse_width - t});
        h = std::max(h, 0.0);
        state = set_dynamics_step(mem, state, v, h);
        t += h;
        if (h > 0.0) h_prev = h;
        ++out.steps;

        r = memristor_resistance(mem, state);
        sol = solve_dc(driven, r, vars, opts.solver, &sol);
        out.peak_current = std::max(out.peak_current, sol.i_mem);
    }

    out.elapsed = t;
    out.state = state;
    out.final_current = sol.i_mem;
    out.final_v_mem = sol.v_mem();
    out.resistance_clean = memristor_resistance(mem, state);
    double final_r = out.resistance_clean;
    if (opts.apply_lrs_noise) {
        final_r *= vars.lrs_multiplier(mem.lrs_noise.sigma_at(pulse_amplitude));
    }
    out.resistance = std::clamp(final_r, mem.r_on, mem.r_off);
    return out;
}

TransientResult dc_set(const CellTopology& top, const MemristorParams& mem, double drive, const MemristorState& m0,
                       const VariationSample& vars, const TransientOptions& opts) {
    return transient_set(top, mem, drive, kDcProgrammingWidth, m0, vars, opts);
}

}  // namespace dpe
