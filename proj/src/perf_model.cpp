#include "exakit/perf_model.hpp"

#include <algorithm>
#include <bit>
#include <cmath>

#include "exakit/matrix.hpp"

namespace exakit {

void check_params(const MachineParams& mp) {
    if (!(mp.r_dgemm > 0.0) || !(mp.r_pfact > 0.0) || !(mp.bw_net > 0.0)) {
        throw ContractViolation("machine params: rates and bandwidth must be > 0");
    }
    if (!(mp.latency_alpha >= 0.0)) throw ContractViolation("machine params: latency must be >= 0");
    if (mp.nb < 1 || mp.n < mp.nb || mp.n % mp.nb != 0) {
        throw ContractViolation("machine params: N must be a positive multiple of NB");
    }
    if (mp.p < 1 || mp.q < 1) throw ContractViolation("machine params: P and Q must be >= 1");
    if (mp.lookahead != 0 && mp.lookahead != 1) throw ContractViolation("machine params: lookahead is 0 or 1");
    if (!(mp.element_bytes > 0.0)) throw ContractViolation("machine params: element_bytes must be > 0");
}

std::string to_string(BoundBy b) {
    switch (b) {
        case BoundBy::Dgemm: return "dgemm";
        case BoundBy::PfactBcast: return "pfact+bcast";
        case BoundBy::Bcast: return "bcast";
        case BoundBy::Swap: return "swap";
    }
    return "?";
}

namespace {

double ceil_log2(std::int64_t q) {
    return static_cast<double>(std::bit_width(static_cast<std::uint64_t>(q - 1)));
}

}  // namespace

PhaseTimes phase_times(const MachineParams& mp, std::int64_t k) {
    if (k < 0 || k >= mp.panels()) throw ContractViolation("phase_times: panel index out of range");
    const double nk = static_cast<double>(mp.n - k * mp.nb);
    const double nb = static_cast<double>(mp.nb);
    const double ranks = static_cast<double>(mp.p * mp.q);
    const bool last = k == mp.panels() - 1;
    const double volume = nk * nb * mp.element_bytes / mp.bw_net;

    PhaseTimes t;
    t.k = k;
    t.t_dgemm = last ? 0.0 : 2.0 * nk * nk * nb / (ranks * mp.r_dgemm);
    t.t_pfact = 2.0 * nk * nb * nb / mp.r_pfact;
    t.t_bcast = mp.latency_alpha * ceil_log2(mp.q) + volume;
    t.t_swap = last ? 0.0 : mp.latency_alpha + volume;

    const bool hide_pfact = mp.lookahead == 1 && k > 0;
    const double comm = hide_pfact ? t.t_bcast : t.t_pfact + t.t_bcast;
    t.step = t.t_dgemm;
    t.bound_by = BoundBy::Dgemm;
    if (comm > t.step) {
        t.step = comm;
        t.bound_by = hide_pfact ? BoundBy::Bcast : BoundBy::PfactBcast;
    }
    if (t.t_swap > t.step) {
        t.step = t.t_swap;
        t.bound_by = BoundBy::Swap;
    }
    return t;
}

RuntimeTrace total_runtime(const MachineParams& mp) {
    check_params(mp);
    RuntimeTrace out;
    out.panels.reserve(static_cast<std::size_t>(mp.panels()));
    for (std::int64_t k = 0; k < mp.panels(); ++k) {
        out.panels.push_back(phase_times(mp, k));
        out.total += out.panels.back().step;
    }
    return out;
}

std::optional<std::int64_t> crossover_index(const MachineParams& mp) {
    check_params(mp);
    for (std::int64_t k = 0; k < mp.panels(); ++k) {
        const PhaseTimes t = phase_times(mp, k);
        if (t.t_dgemm < t.t_swap) return k;
    }
    return std::nullopt;
}

std::optional<std::int64_t> bound_switch_index(const RuntimeTrace& trace) {
    if (trace.panels.empty()) return std::nullopt;
    for (std::size_t k = 0; k + 1 < trace.panels.size(); ++k)
        if (trace.panels[k].bound_by != BoundBy::Dgemm) return trace.panels[k].k;
    return std::nullopt;
}

double FlopCount::value() const {
    // Correctly rounded num/3: round the integer quotient to 53 bits, with
    // the fractional remainder (0, 1/3 or 2/3) only breaking exact ties.
    const unsigned __int128 q = numerator / denominator;
    const bool has_frac = numerator % denominator != 0;
    int bits = 0;
    for (unsigned __int128 t = q; t != 0; t >>= 1) ++bits;
    if (bits <= 53) {
        const auto qi = static_cast<std::uint64_t>(q);
        const long double exact = static_cast<long double>(qi) +
                                  static_cast<long double>(numerator % denominator) / 3.0L;
        return static_cast<double>(exact);
    }
    const int shift = bits - 53;
    auto mant = static_cast<std::uint64_t>(q >> shift);
    const unsigned __int128 rem = q & ((static_cast<unsigned __int128>(1) << shift) - 1);
    const unsigned __int128 half = static_cast<unsigned __int128>(1) << (shift - 1);
    if (rem > half || (rem == half && (has_frac || (mant & 1u)))) ++mant;
    return std::ldexp(static_cast<double>(mant), shift);
}

FlopCount hpl_flops_exact(std::uint64_t n) {
    const unsigned __int128 nn = n;
    return FlopCount{2 * nn * nn * nn};
}

double hpl_flops(std::uint64_t n) { return hpl_flops_exact(n).value(); }

double rmax(const MachineParams& mp) { return hpl_flops(static_cast<std::uint64_t>(mp.n)) / total_runtime(mp).total; }

double scaling_efficiency(double rmax_n, double n_nodes, double rmax_1) {
    if (!(rmax_n > 0.0) || !(n_nodes > 0.0) || !(rmax_1 > 0.0)) {
        throw ContractViolation("scaling_efficiency: arguments must be > 0");
    }
    return rmax_n / (n_nodes * rmax_1);
}

namespace {

struct Fit {
    MachineParams params;
    double rmax = 0.0;
    double err = 0.0;
};

template <class Setter>
Fit bisect(const MachineParams& base, double target, double lo, double hi, Setter set) {
    auto eval = [&](double v) {
        MachineParams mp = base;
        set(mp, v);
        return Fit{mp, rmax(mp), 0.0};
    };
    Fit f_lo = eval(lo);
    Fit f_hi = eval(hi);
    Fit best;
    if (f_hi.rmax <= target) {
        best = f_hi;
    } else if (f_lo.rmax >= target) {
        best = f_lo;
    } else {
        double a = std::log(lo);
        double b = std::log(hi);
        best = f_hi;
        for (int it = 0; it < 200 && b - a > 1e-15; ++it) {
            const double mid = 0.5 * (a + b);
            Fit f = eval(std::exp(mid));
            if (f.rmax < target) {
                a = mid;
            } else {
                b = mid;
                best = f;
            }
        }
    }
    best.err = std::fabs(best.rmax - target) / target;
    return best;
}

}  // namespace

CalibrationResult calibrate(const CalibrationTargets& targets, const MachineParams& fixed, FreeParam free,
                            const CalibrationBounds& bounds) {
    if (!(targets.rmax > 0.0)) throw ContractViolation("calibrate: target rmax must be > 0");
    auto set_r = [](MachineParams& mp, double v) { mp.r_dgemm = v; };
    auto set_bw = [](MachineParams& mp, double v) { mp.bw_net = v; };

    MachineParams base = fixed;
    if (free != FreeParam::BwNet && !(base.r_dgemm > 0.0)) base.r_dgemm = bounds.r_dgemm_lo;
    if (free != FreeParam::RDgemm && !(base.bw_net > 0.0)) base.bw_net = bounds.bw_net_hi;
    check_params(base);

    Fit best;
    if (free == FreeParam::RDgemm) {
        best = bisect(base, targets.rmax, bounds.r_dgemm_lo, bounds.r_dgemm_hi, set_r);
    } else if (free == FreeParam::BwNet) {
        best = bisect(base, targets.rmax, bounds.bw_net_lo, bounds.bw_net_hi, set_bw);
    } else {
        const int pts = std::max(bounds.grid_points, 2);
        const double llo = std::log(bounds.bw_net_lo);
        const double lhi = std::log(bounds.bw_net_hi);
        bool have = false;
        for (int i = 0; i < pts; ++i) {
            MachineParams mp = base;
            mp.bw_net = std::exp(llo + (lhi - llo) * i / (pts - 1));
            Fit f = bisect(mp, targets.rmax, bounds.r_dgemm_lo, bounds.r_dgemm_hi, set_r);
            constexpr double kTie = 1e-9;
            const bool better = !have || f.err < best.err - kTie ||
                                (std::fabs(f.err - best.err) <= kTie && f.params.r_dgemm < best.params.r_dgemm);
            if (better) {
                best = f;
                have = true;
            }
        }
    }

    CalibrationResult out;
    out.params = best.params;
    out.achieved_rmax = best.rmax;
    out.rel_error = best.err;
    if (targets.rmax_single_node) {
        out.achieved_efficiency = scaling_efficiency(best.rmax, targets.nodes, *targets.rmax_single_node);
    }
    constexpr double kMaxRelError = 0.20;
    out.ok = best.err <= kMaxRelError;
    if (!out.ok) {
        out.diagnostic = "calibration failed: best relative error " + std::to_string(best.err) +
                         " exceeds 20% within search bounds";
    }
    return out;
}

}  // namespace exakit
