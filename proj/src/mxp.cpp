#include "exakit/mxp.hpp"

#include <cmath>

#include "exakit/hpl.hpp"
#include "exakit/rng.hpp"

namespace exakit {

std::string to_string(RefinementMethod m) { return m == RefinementMethod::Plain ? "plain" : "gmres"; }

DenseMatrix generate_mxp_matrix(std::size_t n, std::uint64_t seed) {
    if (n == 0) throw ContractViolation("generate_mxp_matrix: n must be >= 1");
    PortableRng rng(seed);
    DenseMatrix a(n, n);
    for (std::size_t j = 0; j < n; ++j)
        for (std::size_t i = 0; i < n; ++i) a(i, j) = rng.centered();
    for (std::size_t i = 0; i < n; ++i) {
        double off = 0.0;
        for (std::size_t j = 0; j < n; ++j)
            if (j != i) off += std::fabs(a(i, j));
        a(i, i) = static_cast<double>(n) / 4.0 + off;
    }
    return a;
}

std::pair<DenseMatrix, std::vector<double>> generate_mxp_system(std::size_t n, std::uint64_t seed) {
    DenseMatrix a = generate_mxp_matrix(n, seed);
    PortableRng rng(seed);
    for (std::size_t k = 0; k < n * n; ++k) rng.next_u64();
    std::vector<double> b(n);
    for (auto& v : b) v = rng.centered();
    return {std::move(a), std::move(b)};
}

std::uint64_t plain_iteration_flops(std::uint64_t n) { return 4 * n * n + n; }

namespace {

// r <- b - A x; returns FP64 flops spent.
std::uint64_t residual(const DenseMatrix& a, const std::vector<double>& x, const std::vector<double>& b,
                       std::vector<double>& r) {
    const std::size_t n = a.rows();
    std::vector<double> ax(n, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
        const double xj = x[j];
        for (std::size_t i = 0; i < n; ++i) ax[i] += a(i, j) * xj;
    }
    for (std::size_t i = 0; i < n; ++i) r[i] = b[i] - ax[i];
    return 2 * n * n + n;
}

std::uint64_t solve_flops(std::uint64_t n) { return 2 * n * (n - 1) + n; }

RefinementReport base_report(const NoPivotFactors& f, RefinementMethod method) {
    RefinementReport rep;
    rep.method = method;
    rep.store = f.precision();
    rep.n = f.order();
    rep.storage_bytes = f.storage_bytes();
    rep.lowprec_flops = flops::lu(f.order());
    return rep;
}

double dot(const std::vector<double>& u, const std::vector<double>& v) {
    double s = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) s += u[i] * v[i];
    return s;
}

}  // namespace

MxpResult refine_plain(const DenseMatrix& a, const std::vector<double>& b, const NoPivotFactors& f,
                       double tol, int max_iters) {
    if (tol <= 0.0) throw ContractViolation("refine: tol must be > 0");
    const std::size_t n = a.rows();
    MxpResult out{std::vector<double>(n, 0.0), base_report(f, RefinementMethod::Plain)};
    RefinementReport& rep = out.report;
    std::vector<double>& x = out.x;
    std::vector<double> r = b;
    rep.final_residual = scaled_residual(a, x, b);
    rep.converged = rep.final_residual < tol;

    while (!rep.converged && rep.iterations < max_iters) {
        std::vector<double> d = r;
        f.solve_in_place(d);
        for (std::size_t i = 0; i < n; ++i) x[i] += d[i];
        residual(a, x, b, r);
        rep.fp64_flops += plain_iteration_flops(n);
        ++rep.iterations;
        rep.final_residual = scaled_residual(a, x, b);
        rep.residual_history.push_back(rep.final_residual);
        rep.converged = rep.final_residual < tol;
    }
    return out;
}

MxpResult refine_gmres(const DenseMatrix& a, const std::vector<double>& b, const NoPivotFactors& f,
                       int restart_m, double tol, int max_iters) {
    if (tol <= 0.0) throw ContractViolation("refine: tol must be > 0");
    if (restart_m < 1) throw ContractViolation("refine_gmres: restart must be >= 1");
    const std::size_t n = a.rows();
    const auto m = static_cast<std::size_t>(restart_m);
    MxpResult out{std::vector<double>(n, 0.0), base_report(f, RefinementMethod::Gmres)};
    RefinementReport& rep = out.report;
    std::vector<double>& x = out.x;
    std::vector<double> r = b;
    rep.final_residual = scaled_residual(a, x, b);
    rep.converged = rep.final_residual < tol;

    std::vector<std::vector<double>> v(m + 1, std::vector<double>(n));
    std::vector<std::vector<double>> h(m + 1, std::vector<double>(m, 0.0));
    std::vector<double> cs(m), sn(m), g(m + 1), w(n);

    while (!rep.converged && rep.iterations < max_iters) {
        ++rep.iterations;
        std::vector<double> z = r;
        f.solve_in_place(z);
        rep.fp64_flops += solve_flops(n);
        const double beta = std::sqrt(dot(z, z));
        rep.fp64_flops += 2 * n;
        if (beta == 0.0) {
            rep.diagnostic = "zero preconditioned residual norm at outer iteration " +
                             std::to_string(rep.iterations);
            rep.residual_history.push_back(rep.final_residual);
            break;
        }
        for (std::size_t i = 0; i < n; ++i) v[0][i] = z[i] / beta;
        std::fill(g.begin(), g.end(), 0.0);
        g[0] = beta;

        std::size_t k = 0;
        for (std::size_t j = 0; j < m; ++j) {
            // w = M^{-1} A v_j
            std::fill(w.begin(), w.end(), 0.0);
            for (std::size_t c = 0; c < n; ++c) {
                const double vc = v[j][c];
                for (std::size_t i = 0; i < n; ++i) w[i] += a(i, c) * vc;
            }
            f.solve_in_place(w);
            rep.fp64_flops += 2 * n * n + solve_flops(n);
            for (std::size_t i = 0; i <= j; ++i) {
                h[i][j] = dot(w, v[i]);
                for (std::size_t t = 0; t < n; ++t) w[t] -= h[i][j] * v[i][t];
            }
            h[j + 1][j] = std::sqrt(dot(w, w));
            rep.fp64_flops += 4 * n * (j + 1) + 2 * n;

            for (std::size_t i = 0; i < j; ++i) {
                const double t = cs[i] * h[i][j] + sn[i] * h[i + 1][j];
                h[i + 1][j] = -sn[i] * h[i][j] + cs[i] * h[i + 1][j];
                h[i][j] = t;
            }
            const double hn = std::hypot(h[j][j], h[j + 1][j]);
            const double sub = h[j + 1][j];
            cs[j] = h[j][j] / hn;
            sn[j] = sub / hn;
            h[j][j] = hn;
            h[j + 1][j] = 0.0;
            g[j + 1] = -sn[j] * g[j];
            g[j] = cs[j] * g[j];
            k = j + 1;

            if (sub == 0.0) {
                rep.diagnostic = "Krylov breakdown at inner step " + std::to_string(j) +
                                 " of outer iteration " + std::to_string(rep.iterations);
                break;
            }
            for (std::size_t i = 0; i < n; ++i) v[j + 1][i] = w[i] / sub;
            if (std::fabs(g[j + 1]) <= beta * kEpsilon) break;
        }

        std::vector<double> y(k);
        for (std::size_t i = k; i-- > 0;) {
            double s = g[i];
            for (std::size_t t = i + 1; t < k; ++t) s -= h[i][t] * y[t];
            y[i] = s / h[i][i];
        }
        for (std::size_t i = 0; i < k; ++i)
            for (std::size_t t = 0; t < n; ++t) x[t] += y[i] * v[i][t];
        rep.fp64_flops += 2 * n * k + k * k;

        rep.fp64_flops += residual(a, x, b, r);
        rep.final_residual = scaled_residual(a, x, b);
        rep.residual_history.push_back(rep.final_residual);
        rep.converged = rep.final_residual < tol;
    }
    return out;
}

MxpResult solve_mxp(const DenseMatrix& a, const std::vector<double>& b, const MxpOptions& opts) {
    if (a.rows() != a.cols() || b.size() != a.rows()) throw ContractViolation("solve_mxp: shape mismatch");
    const NoPivotFactors f = lu_nopivot(a.cref(), opts.nb, opts.store);
    MxpResult res = opts.method == RefinementMethod::Plain
                        ? refine_plain(a, b, f, opts.tol, opts.max_iters)
                        : refine_gmres(a, b, f, opts.restart, opts.tol, opts.max_iters);
    res.report.nb = opts.nb;
    return res;
}

}  // namespace exakit
