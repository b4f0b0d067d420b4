#include "exakit/hpl.hpp"

#include <algorithm>
#include <cmath>

#include "exakit/rng.hpp"

namespace exakit {

DistributedMatrix::DistributedMatrix(const ProcessGrid& grid, std::int64_t n) : grid_(grid), n_(n) {
    shards_.reserve(static_cast<std::size_t>(grid.size()));
    for (std::int64_t q = 0; q < grid.q(); ++q) {
        for (std::int64_t p = 0; p < grid.p(); ++p) {
            shards_.emplace_back(static_cast<std::size_t>(grid.local_extent(n, p, grid.p())),
                                 static_cast<std::size_t>(grid.local_extent(n, q, grid.q())));
        }
    }
}

DistributedMatrix DistributedMatrix::scatter(const DenseMatrix& global, const ProcessGrid& grid) {
    const auto n = static_cast<std::int64_t>(global.rows());
    DistributedMatrix d(grid, n);
    for (std::int64_t j = 0; j < n; ++j)
        for (std::int64_t i = 0; i < n; ++i) d.at(i, j) = global(i, j);
    return d;
}

double DistributedMatrix::get(std::int64_t i, std::int64_t j) const {
    const Ownership o = owner(i, j, grid_, n_);
    return shard(o.p, o.q)(o.li, o.lj);
}

double& DistributedMatrix::at(std::int64_t i, std::int64_t j) {
    const Ownership o = owner(i, j, grid_, n_);
    return shard(o.p, o.q)(o.li, o.lj);
}

DenseMatrix DistributedMatrix::assemble() const {
    DenseMatrix g(n_, n_);
    for (std::int64_t j = 0; j < n_; ++j)
        for (std::int64_t i = 0; i < n_; ++i) g(i, j) = get(i, j);
    return g;
}

std::pair<DenseMatrix, std::vector<double>> generate_hpl_system(std::int64_t n, std::uint64_t seed) {
    PortableRng rng(seed);
    DenseMatrix a(n, n);
    for (std::int64_t j = 0; j < n; ++j)
        for (std::int64_t i = 0; i < n; ++i) a(i, j) = rng.centered();
    std::vector<double> b(n);
    for (auto& v : b) v = rng.centered();
    return {std::move(a), std::move(b)};
}

HplState make_hpl_state(const BenchmarkConfig& cfg, const DenseMatrix& a, std::vector<double> b) {
    const ConfigCheck check = validate_config(cfg);
    if (!check.ok()) throw ContractViolation("invalid benchmark config: " + check.violations.front());
    if (cfg.n > kMaxDeskN) throw ContractViolation("N exceeds the desk-scale limit");
    if (static_cast<std::int64_t>(a.rows()) != cfg.n || static_cast<std::int64_t>(a.cols()) != cfg.n ||
        static_cast<std::int64_t>(b.size()) != cfg.n) {
        throw ContractViolation("system size does not match config N");
    }
    ProcessGrid grid(cfg.p, cfg.q, cfg.nb);
    HplState s{cfg, grid, DistributedMatrix::scatter(a, grid), std::move(b), {}, 0, {}, {}};
    s.pivots.reserve(static_cast<std::size_t>(cfg.n));
    return s;
}

namespace {

MatrixRef<double> column_view(std::vector<double>& v, std::size_t offset, std::size_t len) {
    return {v.data() + offset, len, 1, v.size()};
}

}  // namespace

void panel_step(HplState& s, std::int64_t k) {
    const ProcessGrid& g = s.grid;
    const std::int64_t n = s.cfg.n;
    const std::int64_t nb = g.nb();
    const std::int64_t np = g.p();
    const std::int64_t nq = g.q();
    if (k != s.next_panel || k < 0 || k >= n / nb) throw ContractViolation("panel_step: panel out of order");

    const std::int64_t k0 = k * nb;
    const std::int64_t rest = n - k0;
    const std::int64_t trailing = rest - nb;
    const std::int64_t pk = g.owner_coord(k0, np);
    const std::int64_t qk = g.owner_coord(k0, nq);
    const std::int64_t panel_lj = g.local_index(k0, nq);
    PanelRecord rec;
    rec.panel = k;

    // PFACT on process column qk.
    DenseMatrix panel(rest, nb);
    for (std::int64_t r = 0; r < rest; ++r) {
        const std::int64_t gi = k0 + r;
        const DenseMatrix& sh = s.a.shard(g.owner_coord(gi, np), qk);
        const std::int64_t li = g.local_index(gi, np);
        for (std::int64_t c = 0; c < nb; ++c) panel(r, c) = sh(li, panel_lj + c);
    }
    PivotVector piv;
    try {
        piv = panel_factorize(panel.ref());
    } catch (const SingularMatrixError& e) {
        throw SingularMatrixError("hpl: singular panel at column " + std::to_string(k0 + e.index()),
                                  k0 + e.index());
    }
    for (std::int64_t r = 0; r < rest; ++r) {
        const std::int64_t gi = k0 + r;
        DenseMatrix& sh = s.a.shard(g.owner_coord(gi, np), qk);
        const std::int64_t li = g.local_index(gi, np);
        for (std::int64_t c = 0; c < nb; ++c) sh(li, panel_lj + c) = panel(r, c);
    }
    rec.flops_pfact = flops::panel_factorize(rest, nb);

    // BCAST along each process row: rank (p, q) receives the panel rows it owns.
    std::vector<DenseMatrix> recv(static_cast<std::size_t>(g.size()));
    for (std::int64_t p = 0; p < np; ++p) {
        std::vector<std::int64_t> rows;
        for (std::int64_t r = 0; r < rest; ++r)
            if (g.owner_coord(k0 + r, np) == p) rows.push_back(r);
        DenseMatrix slice(rows.size(), nb);
        for (std::size_t r = 0; r < rows.size(); ++r)
            for (std::int64_t c = 0; c < nb; ++c) slice(r, c) = panel(rows[r], c);
        for (std::int64_t q = 0; q < nq; ++q) {
            recv[g.rank_of(p, q)] = slice;
            if (q != qk) s.comm.bcast_bytes += slice.storage_bytes();
        }
    }
    rec.bytes_bcast = static_cast<std::uint64_t>(rest * nb) * 8;

    // SWAP: pivot rows across every column outside the panel, plus b.
    for (std::int64_t j = 0; j < nb; ++j) {
        const std::int64_t r1 = k0 + j;
        const std::int64_t r2 = k0 + static_cast<std::int64_t>(piv[j]);
        if (r1 == r2) continue;
        const std::int64_t p1 = g.owner_coord(r1, np);
        const std::int64_t p2 = g.owner_coord(r2, np);
        const std::int64_t l1 = g.local_index(r1, np);
        const std::int64_t l2 = g.local_index(r2, np);
        for (std::int64_t q = 0; q < nq; ++q) {
            DenseMatrix& s1 = s.a.shard(p1, q);
            DenseMatrix& s2 = s.a.shard(p2, q);
            const std::int64_t cols = static_cast<std::int64_t>(s1.cols());
            std::uint64_t moved = 0;
            for (std::int64_t lc = 0; lc < cols; ++lc) {
                const std::int64_t gc = g.global_index(lc, q, nq);
                if (gc >= k0 && gc < k0 + nb) continue;
                std::swap(s1(l1, lc), s2(l2, lc));
                ++moved;
            }
            if (p1 != p2) s.comm.swap_bytes += 2 * 8 * moved;
        }
        std::swap(s.b[r1], s.b[r2]);
        rec.bytes_swap += 2 * 8 * static_cast<std::uint64_t>(trailing);
    }

    if (trailing > 0) {
        // DTRSM on process row pk, then U row broadcast down each column.
        auto l11 = panel.cref().block(0, 0, nb, nb);
        const std::int64_t li0 = g.local_index(k0, np);
        std::vector<DenseMatrix> urow(static_cast<std::size_t>(nq));
        for (std::int64_t q = 0; q < nq; ++q) {
            DenseMatrix& sh = s.a.shard(pk, q);
            const std::int64_t lj0 = g.local_extent(k0 + nb, q, nq);
            const std::int64_t w = static_cast<std::int64_t>(sh.cols()) - lj0;
            auto u = sh.ref().block(li0, lj0, nb, w);
            trsm_update(l11, u);
            rec.flops_dtrsm += flops::trsm(nb, w);
            urow[q] = to_matrix<double>(u);
            s.comm.u_bcast_bytes += static_cast<std::uint64_t>((np - 1) * nb * w) * 8;
        }

        // DGEMM on every rank's trailing block.
        for (std::int64_t q = 0; q < nq; ++q) {
            const std::int64_t lj0 = g.local_extent(k0 + nb, q, nq);
            for (std::int64_t p = 0; p < np; ++p) {
                DenseMatrix& sh = s.a.shard(p, q);
                const std::int64_t li1 = g.local_extent(k0 + nb, p, np);
                const std::int64_t m = static_cast<std::int64_t>(sh.rows()) - li1;
                const std::int64_t w = static_cast<std::int64_t>(sh.cols()) - lj0;
                if (m == 0 || w == 0) continue;
                const DenseMatrix& lp = recv[g.rank_of(p, q)];
                const std::int64_t skip = static_cast<std::int64_t>(lp.rows()) - m;
                gemm_update(sh.ref().block(li1, lj0, m, w), lp.cref().block(skip, 0, m, nb), urow[q].cref());
                rec.flops_dgemm += flops::gemm(m, w, nb);
            }
        }
    }

    // Forward elimination of the replicated right-hand side.
    trsm_update(panel.cref().block(0, 0, nb, nb), column_view(s.b, k0, nb));
    if (trailing > 0) {
        gemm_update(column_view(s.b, k0 + nb, trailing), panel.cref().block(nb, 0, trailing, nb),
                    column_view(s.b, k0, nb));
    }

    for (std::size_t p : piv) s.pivots.push_back(p + k0);
    s.trace.push_back(rec);
    ++s.next_panel;
}

std::vector<double> back_substitute(const HplState& s) {
    const std::int64_t n = s.cfg.n;
    if (s.next_panel != n / s.cfg.nb) throw ContractViolation("back_substitute: factorization incomplete");
    std::vector<double> x(n);
    for (std::int64_t i = n - 1; i >= 0; --i) {
        double acc = s.b[i];
        for (std::int64_t l = i + 1; l < n; ++l) acc -= s.a.get(i, l) * x[l];
        x[i] = acc / s.a.get(i, i);
    }
    return x;
}

double scaled_residual(const DenseMatrix& a, std::span<const double> x, std::span<const double> b) {
    const std::size_t n = a.rows();
    double r_norm = 0.0;
    double a_norm = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double acc = 0.0;
        double row = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            acc += a(i, j) * x[j];
            row += std::fabs(a(i, j));
        }
        r_norm = std::max(r_norm, std::fabs(acc - b[i]));
        a_norm = std::max(a_norm, row);
    }
    double x_norm = 0.0;
    double b_norm = 0.0;
    for (double v : x) x_norm = std::max(x_norm, std::fabs(v));
    for (double v : b) b_norm = std::max(b_norm, std::fabs(v));
    const double denom = kEpsilon * (a_norm * x_norm + b_norm) * static_cast<double>(n);
    if (r_norm == 0.0) return 0.0;
    return r_norm / denom;
}

RunReport run_hpl(const BenchmarkConfig& cfg, const DenseMatrix& a, const std::vector<double>& b) {
    HplState s = make_hpl_state(cfg, a, b);
    const std::int64_t panels = cfg.n / cfg.nb;
    for (std::int64_t k = 0; k < panels; ++k) panel_step(s, k);

    RunReport r;
    r.n = cfg.n;
    r.nb = cfg.nb;
    r.p = cfg.p;
    r.q = cfg.q;
    r.lookahead = cfg.lookahead;
    r.panels = panels;
    r.x = back_substitute(s);
    r.residual = scaled_residual(a, r.x, b);
    r.passed = r.residual < r.threshold;
    r.trace = std::move(s.trace);
    r.comm = s.comm;
    return r;
}

RunReport run_hpl(const BenchmarkConfig& cfg, std::uint64_t seed) {
    auto [a, b] = generate_hpl_system(cfg.n, seed);
    RunReport r = run_hpl(cfg, a, b);
    r.seed = seed;
    return r;
}

std::vector<PanelRecord> emit_phase_trace(const RunReport& report) { return report.trace; }

}  // namespace exakit
